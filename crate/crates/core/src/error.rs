//! Crate-wide error type.
//!
//! Every fallible operation in this library returns [`Result`]. Variants are
//! grouped by the stage that raises them: graph construction, weight-matrix
//! validation, dataset loading and partitioning, objective evaluation, and
//! experiment configuration. Messages carry enough context (paths, indices,
//! offending values) that a failure in a long batch run can be diagnosed from
//! the log line alone.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // --- graph construction -------------------------------------------------
    #[error("graph needs at least one node")]
    EmptyGraph,

    #[error("geometric graph radius must lie in (0, sqrt(2)] (got {radius})")]
    BadRadius { radius: f64 },

    #[error(
        "geometric graph draw is disconnected (seed {seed}, radius {radius}); \
         raise the radius or choose a different seed"
    )]
    DisconnectedDraw { seed: u64, radius: f64 },

    #[error("topology is disconnected")]
    Disconnected,

    // --- mixing matrices -----------------------------------------------------
    #[error("weight matrix rejected: {0}")]
    BadWeights(String),

    #[error("weight matrix does not mix: second-largest |eigenvalue| is {lambda} >= 1")]
    NonMixing { lambda: f64 },

    // --- datasets ------------------------------------------------------------
    #[error("bad IDX magic in {path}: expected {expected:#010x}, found {found:#010x}")]
    IdxMagic { path: String, expected: u32, found: u32 },

    #[error("truncated IDX file {path}: needed {needed} bytes, found {found}")]
    IdxTruncated { path: String, needed: usize, found: usize },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("class {class} is absent from the dataset")]
    MissingClass { class: i64 },

    #[error("sample {index} has zero feature norm and cannot be normalized")]
    ZeroNormSample { index: usize },

    #[error("cannot give each of {nodes} nodes a sample: only {samples} available")]
    TooFewSamples { samples: usize, nodes: usize },

    #[error("cannot split {samples} samples of class {class} across {nodes} single-class nodes")]
    PartitionInfeasible { class: i64, samples: usize, nodes: usize },

    // --- objectives ----------------------------------------------------------
    #[error("component index {j} out of range: node {node} holds {m} components")]
    ComponentOutOfRange { node: usize, m: usize, j: usize },

    #[error("node index {node} out of range: problem has {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix for node {node}, component {j} is not symmetric PSD: {detail}")]
    NotPsd { node: usize, j: usize, detail: String },

    #[error("reference solve did not reach gradient norm {tol} within {iters} iterations (reached {reached})")]
    ReferenceSolveFailed { tol: f64, iters: u64, reached: f64 },

    // --- configuration and I/O -----------------------------------------------
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed fixture {path}: {message}")]
    BadFixture { path: String, message: String },

    // --- runtime -------------------------------------------------------------
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    /// Wrap an I/O error with the path it occurred on.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Shorthand for a config-section error with a `section.key` path.
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }
}
