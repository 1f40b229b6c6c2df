//! Experiment configuration files.
//!
//! The on-disk format is a sectioned key = value text, one assignment per
//! line, with `#` starting a comment line:
//!
//! ```text
//! [experiment]
//! seed = 7
//!
//! [graph]
//! kind = exponential
//! n = 16
//!
//! [objective]
//! kind = quadratic
//! components = 200
//! dim = 10
//!
//! [algorithm]
//! name = gt_saga
//! budget_epochs = 30
//! ```
//!
//! Parsing is strict: an unknown section, an unknown key, a duplicate, a
//! malformed value, or a key that does not apply to the chosen variant (a
//! `radius` on a ring graph, a `t_inner` on a single-loop method) is an
//! error naming the full `section.key` path. Omitted optional keys fall
//! back to documented defaults; seeds that default to values derived from
//! the master seed are materialized at parse time so the parsed struct is
//! self-contained.
//!
//! A handful of values cannot be resolved until the problem instance
//! exists (a step size from the `one_over_L` preset needs the smoothness
//! constant, the default regularizer needs the sample count). These stay
//! symbolic in [`ExperimentConfig`] and are filled in by the experiment
//! runner, which then writes a fully resolved copy of the config next to
//! its outputs via [`ExperimentConfig::echo`]. Echoed text parses back to
//! an equivalent config, so a run directory is always reproducible from
//! its own `config.echo`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dataset::PartitionMode;
use crate::decentralized::Algorithm;
use crate::error::{Error, Result};
use crate::graph::GraphKind;
use crate::rng::{derive_seed, salt};
use crate::vr::SvrgOption;
use crate::weights::WeightRule;

// ---------------------------------------------------------------------------
// parsed schema

/// Fully parsed experiment description. Everything an experiment run needs
/// except the values that depend on the built problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Master seed. Every derived stream (graph draw, dataset draw,
    /// partition shuffle, per-node sampling) is keyed off this unless the
    /// config pins a stage seed explicitly.
    pub seed: u64,
    pub graph: GraphConfig,
    pub weights: WeightRule,
    /// Present exactly when the objective is logistic.
    pub data: Option<DataConfig>,
    pub objective: ObjectiveConfig,
    pub algorithm: AlgorithmConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub n: usize,
    /// Connectivity radius, random geometric graphs only.
    pub radius: Option<f64>,
    /// Placement seed, random geometric graphs only.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic { samples: usize, dim: usize, separation: f64, noise: f64, seed: u64 },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        /// The two raw label values mapped to +1 and -1.
        classes: (i64, i64),
        test_images: Option<PathBuf>,
        test_labels: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    /// Scale every sample to unit Euclidean norm after loading.
    pub normalize: bool,
    pub partition: PartitionMode,
    pub partition_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveConfig {
    Logistic {
        /// None means 1/N, resolved once the dataset size is known.
        lambda_reg: Option<f64>,
        /// Gradient-norm target for the reference minimizer solve.
        reference_tol: f64,
    },
    Quadratic {
        /// Components per node.
        components: usize,
        dim: usize,
        eig_lo: f64,
        eig_hi: f64,
        hetero: f64,
        jitter: f64,
        ridge: f64,
        seed: u64,
    },
}

/// Step size as written in the config: either a number or a rule that
/// turns smoothness constants into one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    Explicit(f64),
    Preset(AlphaPreset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaPreset {
    /// 1/L with L the smoothness constant of the global objective.
    OneOverL,
    /// The conservative rate from the convergence analysis of each
    /// method. Tighter dependence on the spectral gap, much smaller steps.
    Theoretical,
}

impl AlphaPreset {
    pub fn name(&self) -> &'static str {
        match self {
            AlphaPreset::OneOverL => "one_over_L",
            AlphaPreset::Theoretical => "theoretical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub name: Algorithm,
    pub schedule: ScheduleKind,
    /// Constant schedules only.
    pub alpha: Option<AlphaSpec>,
    /// Harmonic schedules only; None means c = 1/mu resolved at build.
    pub c: Option<f64>,
    /// Inner loop length, double-loop methods only; None picks the
    /// balanced default (one epoch worth of steps).
    pub t_inner: Option<u64>,
    /// How double-loop methods form the next outer iterate.
    pub svrg_option: SvrgOption,
    /// Store gradient tables as one scalar per component instead of one
    /// vector. Only the decentralized table method on a linear-model
    /// objective supports this layout.
    pub compact_table: bool,
    /// Run length as a multiple of N/n gradient evaluations per node.
    pub budget_epochs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// Root directory for run outputs; each run writes into a labeled
    /// subdirectory.
    pub directory: PathBuf,
    /// Metric evaluation cadence in rounds.
    pub cadence: u64,
}

// ---------------------------------------------------------------------------
// raw text -> sections

/// One `[section]` worth of assignments, with taken keys removed so
/// leftovers can be reported as unknown.
struct Section {
    name: &'static str,
    entries: HashMap<String, String>,
}

fn key_err(section: &str, key: &str, message: impl Into<String>) -> Error {
    Error::config(format!("{section}.{key}"), message)
}

impl Section {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    /// Typed read of an optional key.
    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| key_err(self.name, key, format!("bad value `{raw}`: {e}"))),
        }
    }

    fn get_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| key_err(self.name, key, "required key is missing"))
    }

    /// Reject a key that exists but does not apply to the chosen variant.
    fn forbid(&mut self, key: &str, why: &str) -> Result<()> {
        match self.take(key) {
            None => Ok(()),
            Some(_) => Err(key_err(self.name, key, why)),
        }
    }

    /// Anything still unclaimed is an unknown key.
    fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().min() {
            return Err(key_err(self.name, key, "unknown key"));
        }
        Ok(())
    }
}

const SECTION_NAMES: [&str; 7] =
    ["experiment", "graph", "weights", "data", "objective", "algorithm", "output"];

fn split_sections(text: &str) -> Result<HashMap<String, HashMap<String, String>>> {
    let mut sections: HashMap<String, HashMap<String, String>> = HashMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {lineno}"), "unterminated section header"))?
                .trim()
                .to_string();
            if !SECTION_NAMES.contains(&name.as_str()) {
                return Err(Error::config(
                    format!("line {lineno}"),
                    format!("unknown section [{name}] (expected one of {})", SECTION_NAMES.join(", ")),
                ));
            }
            if sections.contains_key(&name) {
                return Err(Error::config(format!("line {lineno}"), format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), HashMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {lineno}"), "expected `key = value` or a [section] header")
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let section = current
            .as_ref()
            .ok_or_else(|| Error::config(format!("line {lineno}"), "assignment before any [section] header"))?;
        let entries = sections.get_mut(section).expect("current section was inserted");
        if entries.contains_key(&key) {
            return Err(Error::config(format!("{section}.{key}"), "duplicate key"));
        }
        entries.insert(key, value);
    }
    Ok(sections)
}

/// Pull one section out of the raw map as a [`Section`], empty if absent.
fn section(
    raw: &mut HashMap<String, HashMap<String, String>>,
    name: &'static str,
) -> Section {
    Section { name, entries: raw.remove(name).unwrap_or_default() }
}

fn parse_bool(section: &str, key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(key_err(section, key, format!("bad value `{other}`: expected true or false"))),
    }
}

// ---------------------------------------------------------------------------
// schema validation

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = split_sections(text)?;
        for name in ["graph", "objective", "algorithm"] {
            if !raw.contains_key(name) {
                return Err(Error::config(name, "required section is missing"));
            }
        }
        let data_present = raw.contains_key("data");

        let mut exp = section(&mut raw, "experiment");
        let seed: u64 = exp.get_or("seed", 0)?;
        exp.finish()?;

        let graph = parse_graph(section(&mut raw, "graph"), seed)?;
        let weights = parse_weights(section(&mut raw, "weights"))?;
        let objective = parse_objective(section(&mut raw, "objective"), seed)?;

        let wants_data = matches!(objective, ObjectiveConfig::Logistic { .. });
        let data_section = section(&mut raw, "data");
        let data = if wants_data {
            if !data_present {
                return Err(Error::config("data", "the logistic objective requires a data section"));
            }
            Some(parse_data(data_section, seed)?)
        } else {
            if !data_section.entries.is_empty() {
                return Err(key_err(
                    "data",
                    data_section.entries.keys().min().expect("nonempty"),
                    "the data section only applies to the logistic objective",
                ));
            }
            None
        };

        let algorithm = parse_algorithm(section(&mut raw, "algorithm"), &objective)?;
        let output = parse_output(section(&mut raw, "output"))?;

        debug_assert!(raw.is_empty(), "split_sections only admits known names");
        Ok(ExperimentConfig { seed, graph, weights, data, objective, algorithm, output })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }
}

fn parse_graph(mut s: Section, master: u64) -> Result<GraphConfig> {
    let kind: GraphKind = s.require("kind")?;
    if kind == GraphKind::Custom {
        return Err(key_err("graph", "kind", "custom topologies cannot be described in a config file"));
    }
    let n: usize = s.require("n")?;
    let (radius, seed) = if kind == GraphKind::RandomGeometric {
        let radius: f64 = s.require("radius")?;
        let seed = s.get_or("seed", derive_seed(master, salt::GRAPH))?;
        (Some(radius), Some(seed))
    } else {
        s.forbid("radius", "radius only applies to kind = random_geometric")?;
        s.forbid("seed", "seed only applies to kind = random_geometric")?;
        (None, None)
    };
    s.finish()?;
    Ok(GraphConfig { kind, n, radius, seed })
}

fn parse_weights(mut s: Section) -> Result<WeightRule> {
    let rule = s.get_or("method", WeightRule::Metropolis)?;
    s.finish()?;
    Ok(rule)
}

fn parse_objective(mut s: Section, master: u64) -> Result<ObjectiveConfig> {
    let kind: String = s.require("kind")?;
    let out = match kind.as_str() {
        "logistic" => {
            let lambda_reg: Option<f64> = s.get("lambda_reg")?;
            if let Some(l) = lambda_reg {
                if !(l.is_finite() && l >= 0.0) {
                    return Err(key_err("objective", "lambda_reg", "must be finite and nonnegative"));
                }
            }
            let reference_tol: f64 = s.get_or("reference_tol", 1e-12)?;
            ObjectiveConfig::Logistic { lambda_reg, reference_tol }
        }
        "quadratic" => {
            let components: usize = s.require("components")?;
            let dim: usize = s.require("dim")?;
            let eig_lo: f64 = s.get_or("eig_lo", 0.5)?;
            let eig_hi: f64 = s.get_or("eig_hi", 2.0)?;
            let hetero: f64 = s.get_or("hetero", 1.0)?;
            let jitter: f64 = s.get_or("jitter", 1.0)?;
            let ridge: f64 = s.get_or("ridge", 0.0)?;
            let seed = s.get_or("seed", derive_seed(master, salt::QUADRATIC))?;
            ObjectiveConfig::Quadratic { components, dim, eig_lo, eig_hi, hetero, jitter, ridge, seed }
        }
        other => {
            return Err(key_err("objective", "kind", format!("unknown objective `{other}` (expected logistic or quadratic)")));
        }
    };
    s.finish()?;
    Ok(out)
}

fn parse_data(mut s: Section, master: u64) -> Result<DataConfig> {
    let source_kind: String = s.require("source")?;
    let source = match source_kind.as_str() {
        "synthetic" => {
            let samples: usize = s.require("samples")?;
            let dim: usize = s.require("dim")?;
            let separation: f64 = s.require("separation")?;
            let noise: f64 = s.require("noise")?;
            let seed = s.get_or("seed", derive_seed(master, salt::DATA))?;
            for key in ["images", "labels", "classes", "test_images", "test_labels"] {
                s.forbid(key, "only applies to source = idx")?;
            }
            DataSource::Synthetic { samples, dim, separation, noise, seed }
        }
        "idx" => {
            let images = PathBuf::from(s.require::<String>("images")?);
            let labels = PathBuf::from(s.require::<String>("labels")?);
            let classes = parse_classes(&s.require::<String>("classes")?)?;
            let test_images = s.take("test_images").map(PathBuf::from);
            let test_labels = s.take("test_labels").map(PathBuf::from);
            if test_images.is_some() != test_labels.is_some() {
                return Err(key_err("data", "test_images", "test_images and test_labels must be given together"));
            }
            for key in ["samples", "dim", "separation", "noise", "seed"] {
                s.forbid(key, "only applies to source = synthetic")?;
            }
            DataSource::Idx { images, labels, classes, test_images, test_labels }
        }
        other => {
            return Err(key_err("data", "source", format!("unknown source `{other}` (expected synthetic or idx)")));
        }
    };
    let normalize = match s.take("normalize") {
        None => true,
        Some(raw) => parse_bool("data", "normalize", &raw)?,
    };
    let partition = match s.take("partition").as_deref() {
        None | Some("balanced") => PartitionMode::BalancedHomogeneous,
        Some("unbalanced") => PartitionMode::UnbalancedSingleClass,
        Some(other) => {
            return Err(key_err("data", "partition", format!("unknown mode `{other}` (expected balanced or unbalanced)")));
        }
    };
    let partition_seed = s.get_or("partition_seed", derive_seed(master, salt::PARTITION))?;
    s.finish()?;
    Ok(DataConfig { source, normalize, partition, partition_seed })
}

fn parse_classes(raw: &str) -> Result<(i64, i64)> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let err = || key_err("data", "classes", format!("bad value `{raw}`: expected two integers like `3,8`"));
    if parts.len() != 2 {
        return Err(err());
    }
    let pos: i64 = parts[0].parse().map_err(|_| err())?;
    let neg: i64 = parts[1].parse().map_err(|_| err())?;
    if pos == neg {
        return Err(key_err("data", "classes", "the two classes must differ"));
    }
    Ok((pos, neg))
}

fn parse_algorithm(mut s: Section, objective: &ObjectiveConfig) -> Result<AlgorithmConfig> {
    let name: Algorithm = s.require("name")?;

    let schedule = match s.take("schedule").as_deref() {
        None | Some("constant") => ScheduleKind::Constant,
        Some("harmonic") => ScheduleKind::Harmonic,
        Some(other) => {
            return Err(key_err("algorithm", "schedule", format!("unknown schedule `{other}` (expected constant or harmonic)")));
        }
    };

    let explicit_alpha: Option<f64> = s.get("alpha")?;
    let preset: Option<AlphaPreset> = match s.take("alpha_preset").as_deref() {
        None => None,
        Some("one_over_L") => Some(AlphaPreset::OneOverL),
        Some("theoretical") => Some(AlphaPreset::Theoretical),
        Some(other) => {
            return Err(key_err("algorithm", "alpha_preset", format!("unknown preset `{other}` (expected one_over_L or theoretical)")));
        }
    };
    let c: Option<f64> = s.get("c")?;

    let (alpha, c) = match schedule {
        ScheduleKind::Constant => {
            if c.is_some() {
                return Err(key_err("algorithm", "c", "only applies to schedule = harmonic"));
            }
            let alpha = match (explicit_alpha, preset) {
                (Some(_), Some(_)) => {
                    return Err(key_err("algorithm", "alpha", "give either alpha or alpha_preset, not both"));
                }
                (Some(a), None) => {
                    if !(a.is_finite() && a > 0.0) {
                        return Err(key_err("algorithm", "alpha", "must be finite and positive"));
                    }
                    AlphaSpec::Explicit(a)
                }
                (None, Some(p)) => AlphaSpec::Preset(p),
                (None, None) => AlphaSpec::Preset(AlphaPreset::OneOverL),
            };
            (Some(alpha), None)
        }
        ScheduleKind::Harmonic => {
            if explicit_alpha.is_some() {
                return Err(key_err("algorithm", "alpha", "only applies to schedule = constant"));
            }
            if preset.is_some() {
                return Err(key_err("algorithm", "alpha_preset", "only applies to schedule = constant"));
            }
            if let Some(c) = c {
                if !(c.is_finite() && c > 0.0) {
                    return Err(key_err("algorithm", "c", "must be finite and positive"));
                }
            }
            (None, c)
        }
    };

    let t_inner: Option<u64> = s.get("t_inner")?;
    let svrg_option_raw = s.take("svrg_option");
    if name.has_inner_loop() {
        if let Some(t) = t_inner {
            if t == 0 {
                return Err(key_err("algorithm", "t_inner", "inner loop length must be at least 1"));
            }
        }
    } else {
        if t_inner.is_some() {
            return Err(key_err("algorithm", "t_inner", format!("only applies to double-loop methods, not {name}")));
        }
        if svrg_option_raw.is_some() {
            return Err(key_err("algorithm", "svrg_option", format!("only applies to double-loop methods, not {name}")));
        }
    }
    let svrg_option = match svrg_option_raw {
        None => SvrgOption::LastIterate,
        Some(raw) => raw
            .parse::<SvrgOption>()
            .map_err(|e| key_err("algorithm", "svrg_option", format!("bad value `{raw}`: {e}")))?,
    };

    let compact_table = match s.take("table").as_deref() {
        None | Some("full") => false,
        Some("compact") => {
            if name != Algorithm::GtSaga {
                return Err(key_err("algorithm", "table", format!("compact tables are only available for gt_saga, not {name}")));
            }
            if !matches!(objective, ObjectiveConfig::Logistic { .. }) {
                return Err(key_err("algorithm", "table", "compact tables need the linear-model structure of the logistic objective"));
            }
            true
        }
        Some(other) => {
            return Err(key_err("algorithm", "table", format!("unknown layout `{other}` (expected full or compact)")));
        }
    };

    let budget_epochs: u64 = s.require("budget_epochs")?;
    if budget_epochs == 0 {
        return Err(key_err("algorithm", "budget_epochs", "budget must be at least one epoch"));
    }
    s.finish()?;

    Ok(AlgorithmConfig { name, schedule, alpha, c, t_inner, svrg_option, compact_table, budget_epochs })
}

fn parse_output(mut s: Section) -> Result<OutputConfig> {
    let directory = PathBuf::from(s.take("directory").unwrap_or_else(|| "runs".to_string()));
    let cadence: u64 = s.get_or("cadence", 100)?;
    if cadence == 0 {
        return Err(key_err("output", "cadence", "cadence must be at least 1"));
    }
    s.finish()?;
    Ok(OutputConfig { directory, cadence })
}

// ---------------------------------------------------------------------------
// echo

/// Build-time resolutions of the values a config may leave symbolic. The
/// experiment runner computes these from the problem instance; echoing
/// writes them back as explicit numbers.
#[derive(Debug, Clone, Default)]
pub struct ResolvedValues {
    /// Numeric step size, constant schedules.
    pub alpha: Option<f64>,
    /// Numeric harmonic coefficient, harmonic schedules.
    pub c: Option<f64>,
    /// Inner loop length, double-loop methods.
    pub t_inner: Option<u64>,
    /// Regularizer, logistic objectives.
    pub lambda_reg: Option<f64>,
}

impl ExperimentConfig {
    /// Render this config with every default and preset materialized.
    /// The result parses back (`parse(echo(...))`) to a config that
    /// re-echoes byte-identically, so run directories are self-describing.
    pub fn echo(&self, resolved: &ResolvedValues) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "# resolved experiment configuration");
        let _ = writeln!(w, "[experiment]");
        let _ = writeln!(w, "seed = {}", self.seed);

        let _ = writeln!(w, "\n[graph]");
        let _ = writeln!(w, "kind = {}", self.graph.kind);
        let _ = writeln!(w, "n = {}", self.graph.n);
        if let Some(r) = self.graph.radius {
            let _ = writeln!(w, "radius = {r}");
        }
        if let Some(s) = self.graph.seed {
            let _ = writeln!(w, "seed = {s}");
        }

        let _ = writeln!(w, "\n[weights]");
        let _ = writeln!(w, "method = {}", self.weights);

        if let Some(data) = &self.data {
            let _ = writeln!(w, "\n[data]");
            match &data.source {
                DataSource::Synthetic { samples, dim, separation, noise, seed } => {
                    let _ = writeln!(w, "source = synthetic");
                    let _ = writeln!(w, "samples = {samples}");
                    let _ = writeln!(w, "dim = {dim}");
                    let _ = writeln!(w, "separation = {separation}");
                    let _ = writeln!(w, "noise = {noise}");
                    let _ = writeln!(w, "seed = {seed}");
                }
                DataSource::Idx { images, labels, classes, test_images, test_labels } => {
                    let _ = writeln!(w, "source = idx");
                    let _ = writeln!(w, "images = {}", images.display());
                    let _ = writeln!(w, "labels = {}", labels.display());
                    let _ = writeln!(w, "classes = {},{}", classes.0, classes.1);
                    if let (Some(ti), Some(tl)) = (test_images, test_labels) {
                        let _ = writeln!(w, "test_images = {}", ti.display());
                        let _ = writeln!(w, "test_labels = {}", tl.display());
                    }
                }
            }
            let _ = writeln!(w, "normalize = {}", data.normalize);
            let mode = match data.partition {
                PartitionMode::BalancedHomogeneous => "balanced",
                PartitionMode::UnbalancedSingleClass => "unbalanced",
            };
            let _ = writeln!(w, "partition = {mode}");
            let _ = writeln!(w, "partition_seed = {}", data.partition_seed);
        }

        let _ = writeln!(w, "\n[objective]");
        match &self.objective {
            ObjectiveConfig::Logistic { lambda_reg, reference_tol } => {
                let _ = writeln!(w, "kind = logistic");
                let lambda = lambda_reg.or(resolved.lambda_reg);
                match lambda {
                    Some(l) => {
                        let _ = writeln!(w, "lambda_reg = {l}");
                    }
                    None => {
                        let _ = writeln!(w, "# lambda_reg defaults to 1/N once the dataset is loaded");
                    }
                }
                let _ = writeln!(w, "reference_tol = {reference_tol}");
            }
            ObjectiveConfig::Quadratic { components, dim, eig_lo, eig_hi, hetero, jitter, ridge, seed } => {
                let _ = writeln!(w, "kind = quadratic");
                let _ = writeln!(w, "components = {components}");
                let _ = writeln!(w, "dim = {dim}");
                let _ = writeln!(w, "eig_lo = {eig_lo}");
                let _ = writeln!(w, "eig_hi = {eig_hi}");
                let _ = writeln!(w, "hetero = {hetero}");
                let _ = writeln!(w, "jitter = {jitter}");
                let _ = writeln!(w, "ridge = {ridge}");
                let _ = writeln!(w, "seed = {seed}");
            }
        }

        let a = &self.algorithm;
        let _ = writeln!(w, "\n[algorithm]");
        let _ = writeln!(w, "name = {}", a.name);
        match a.schedule {
            ScheduleKind::Constant => {
                let _ = writeln!(w, "schedule = constant");
                match (a.alpha, resolved.alpha) {
                    (Some(AlphaSpec::Preset(_)), Some(v)) => {
                        let _ = writeln!(w, "alpha = {v}");
                    }
                    (Some(AlphaSpec::Explicit(v)), _) => {
                        let _ = writeln!(w, "alpha = {v}");
                    }
                    (Some(AlphaSpec::Preset(p)), None) => {
                        let _ = writeln!(w, "alpha_preset = {}", p.name());
                    }
                    (None, _) => unreachable!("constant schedules always carry an alpha spec"),
                }
            }
            ScheduleKind::Harmonic => {
                let _ = writeln!(w, "schedule = harmonic");
                match a.c.or(resolved.c) {
                    Some(v) => {
                        let _ = writeln!(w, "c = {v}");
                    }
                    None => {
                        let _ = writeln!(w, "# c defaults to 1/mu once the problem is built");
                    }
                }
            }
        }
        if a.name.has_inner_loop() {
            match a.t_inner.or(resolved.t_inner) {
                Some(t) => {
                    let _ = writeln!(w, "t_inner = {t}");
                }
                None => {
                    let _ = writeln!(w, "# t_inner defaults to one epoch of inner steps");
                }
            }
            let _ = writeln!(w, "svrg_option = {}", a.svrg_option);
        }
        if a.compact_table {
            let _ = writeln!(w, "table = compact");
        }
        let _ = writeln!(w, "budget_epochs = {}", a.budget_epochs);

        let _ = writeln!(w, "\n[output]");
        let _ = writeln!(w, "directory = {}", self.output.directory.display());
        let _ = writeln!(w, "cadence = {}", self.output.cadence);
        out
    }
}

// ---------------------------------------------------------------------------
// sweep patching

/// Rewrite one `section.key` assignment in raw config text, preserving
/// everything else byte for byte. Inserts the key at the end of its
/// section (or appends the section) when absent. The result is not
/// validated; callers re-parse it.
pub fn patch_config_text(text: &str, key_path: &str, value: &str) -> Result<String> {
    let (section_name, key) = key_path
        .split_once('.')
        .ok_or_else(|| Error::config(key_path, "expected a section.key path like algorithm.alpha"))?;
    if section_name.is_empty() || key.is_empty() {
        return Err(Error::config(key_path, "expected a section.key path like algorithm.alpha"));
    }

    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let header = format!("[{section_name}]");
    let mut section_start = None;
    for (i, line) in lines.iter().enumerate() {
        if line.trim() == header {
            section_start = Some(i);
            break;
        }
    }
    let Some(start) = section_start else {
        if !text.is_empty() && !text.ends_with('\n') {
            lines.push(String::new());
        }
        lines.push(header);
        lines.push(format!("{key} = {value}"));
        return Ok(lines.join("\n") + "\n");
    };

    let mut end = lines.len();
    for (i, line) in lines.iter().enumerate().skip(start + 1) {
        if line.trim_start().starts_with('[') {
            end = i;
            break;
        }
    }
    for line in &mut lines[start + 1..end] {
        let body = line.trim();
        if body.starts_with('#') {
            continue;
        }
        if let Some((k, _)) = body.split_once('=') {
            if k.trim() == key {
                *line = format!("{key} = {value}");
                return Ok(lines.join("\n") + "\n");
            }
        }
    }
    // Key absent: insert before the trailing blank lines of the section so
    // the patched line stays visually inside it.
    let mut insert_at = end;
    while insert_at > start + 1 && lines[insert_at - 1].trim().is_empty() {
        insert_at -= 1;
    }
    lines.insert(insert_at, format!("{key} = {value}"));
    Ok(lines.join("\n") + "\n")
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_quadratic() -> String {
        "[graph]\nkind = ring\nn = 8\n\n[objective]\nkind = quadratic\ncomponents = 10\ndim = 5\n\n[algorithm]\nname = gt_saga\nbudget_epochs = 5\n".to_string()
    }

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = ExperimentConfig::parse(&minimal_quadratic()).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.graph.kind, GraphKind::Ring);
        assert_eq!(cfg.graph.n, 8);
        assert_eq!(cfg.graph.radius, None);
        assert_eq!(cfg.weights, WeightRule::Metropolis);
        assert!(cfg.data.is_none());
        match cfg.objective {
            ObjectiveConfig::Quadratic { components, dim, eig_lo, eig_hi, hetero, jitter, ridge, seed } => {
                assert_eq!((components, dim), (10, 5));
                assert_eq!((eig_lo, eig_hi), (0.5, 2.0));
                assert_eq!((hetero, jitter, ridge), (1.0, 1.0, 0.0));
                assert_eq!(seed, derive_seed(0, salt::QUADRATIC));
            }
            other => panic!("wrong objective {other:?}"),
        }
        assert_eq!(cfg.algorithm.name, Algorithm::GtSaga);
        assert_eq!(cfg.algorithm.schedule, ScheduleKind::Constant);
        assert_eq!(cfg.algorithm.alpha, Some(AlphaSpec::Preset(AlphaPreset::OneOverL)));
        assert_eq!(cfg.algorithm.budget_epochs, 5);
        assert!(!cfg.algorithm.compact_table);
        assert_eq!(cfg.output.directory, PathBuf::from("runs"));
        assert_eq!(cfg.output.cadence, 100);
    }

    #[test]
    fn unknown_and_misplaced_keys_are_named_in_full() {
        let typo = minimal_quadratic().replace("budget_epochs = 5", "budget_epochs = 5\nstepsise = 0.1");
        let err = ExperimentConfig::parse(&typo).unwrap_err().to_string();
        assert!(err.contains("algorithm.stepsise"), "unhelpful error: {err}");

        let radius = minimal_quadratic().replace("n = 8", "n = 8\nradius = 0.3");
        let err = ExperimentConfig::parse(&radius).unwrap_err().to_string();
        assert!(err.contains("graph.radius"), "unhelpful error: {err}");

        let t_inner = minimal_quadratic().replace("budget_epochs = 5", "budget_epochs = 5\nt_inner = 40");
        let err = ExperimentConfig::parse(&t_inner).unwrap_err().to_string();
        assert!(err.contains("algorithm.t_inner"), "unhelpful error: {err}");

        let data = minimal_quadratic() + "\n[data]\nsource = synthetic\n";
        let err = ExperimentConfig::parse(&data).unwrap_err().to_string();
        assert!(err.contains("data.source"), "unhelpful error: {err}");

        let both = minimal_quadratic()
            .replace("budget_epochs = 5", "alpha = 0.1\nalpha_preset = one_over_L\nbudget_epochs = 5");
        let err = ExperimentConfig::parse(&both).unwrap_err().to_string();
        assert!(err.contains("algorithm.alpha"), "unhelpful error: {err}");
    }

    #[test]
    fn missing_required_pieces_are_loud() {
        let err = ExperimentConfig::parse("[graph]\nkind = ring\nn = 4\n").unwrap_err().to_string();
        assert!(err.contains("objective"), "unhelpful error: {err}");

        let no_budget = minimal_quadratic().replace("budget_epochs = 5\n", "");
        let err = ExperimentConfig::parse(&no_budget).unwrap_err().to_string();
        assert!(err.contains("algorithm.budget_epochs"), "unhelpful error: {err}");

        let err = ExperimentConfig::parse("kind = ring\n").unwrap_err().to_string();
        assert!(err.contains("line 1"), "unhelpful error: {err}");
    }

    #[test]
    fn compact_tables_are_fenced_to_the_table_method() {
        let on_svrg = minimal_quadratic()
            .replace("name = gt_saga", "name = gt_svrg")
            .replace("budget_epochs = 5", "table = compact\nbudget_epochs = 5");
        let err = ExperimentConfig::parse(&on_svrg).unwrap_err().to_string();
        assert!(err.contains("algorithm.table"), "unhelpful error: {err}");

        // gt_saga but a quadratic objective: no linear-model structure.
        let on_quadratic = minimal_quadratic().replace("budget_epochs = 5", "table = compact\nbudget_epochs = 5");
        let err = ExperimentConfig::parse(&on_quadratic).unwrap_err().to_string();
        assert!(err.contains("algorithm.table"), "unhelpful error: {err}");
    }

    fn logistic_sample() -> String {
        "\
[experiment]
seed = 42

[graph]
kind = random_geometric
n = 20
radius = 0.6

[data]
source = synthetic
samples = 400
dim = 6
separation = 3.0
noise = 1.0
partition = unbalanced

[objective]
kind = logistic

[algorithm]
name = gt_svrg
budget_epochs = 12

[output]
directory = out
cadence = 10
"
        .to_string()
    }

    #[test]
    fn derived_seeds_are_materialized_at_parse_time() {
        let cfg = ExperimentConfig::parse(&logistic_sample()).unwrap();
        assert_eq!(cfg.graph.seed, Some(derive_seed(42, salt::GRAPH)));
        let data = cfg.data.as_ref().unwrap();
        assert_eq!(data.partition_seed, derive_seed(42, salt::PARTITION));
        assert_eq!(data.partition, PartitionMode::UnbalancedSingleClass);
        match &data.source {
            DataSource::Synthetic { seed, .. } => assert_eq!(*seed, derive_seed(42, salt::DATA)),
            other => panic!("wrong source {other:?}"),
        }
        assert!(data.normalize);
    }

    #[test]
    fn echo_parses_back_and_restabilizes() {
        let cfg = ExperimentConfig::parse(&logistic_sample()).unwrap();
        let resolved = ResolvedValues {
            alpha: Some(0.125),
            c: None,
            t_inner: Some(20),
            lambda_reg: Some(0.0025),
        };
        let echoed = cfg.echo(&resolved);
        let reparsed = ExperimentConfig::parse(&echoed).expect("echo must be a valid config");
        // The echo pinned every symbolic value, so the reparsed config
        // carries them explicitly and re-echoes byte for byte.
        assert_eq!(reparsed.algorithm.alpha, Some(AlphaSpec::Explicit(0.125)));
        assert_eq!(reparsed.algorithm.t_inner, Some(20));
        match reparsed.objective {
            ObjectiveConfig::Logistic { lambda_reg, .. } => assert_eq!(lambda_reg, Some(0.0025)),
            other => panic!("wrong objective {other:?}"),
        }
        assert_eq!(reparsed.echo(&resolved), echoed);
        assert_eq!(reparsed.echo(&ResolvedValues::default()), echoed);
    }

    #[test]
    fn patching_replaces_inserts_and_appends() {
        let base = minimal_quadratic();
        let replaced = patch_config_text(&base, "graph.n", "16").unwrap();
        assert!(replaced.contains("n = 16"));
        assert!(!replaced.contains("n = 8"));

        let inserted = patch_config_text(&base, "graph.kind", "complete").unwrap();
        assert!(inserted.contains("kind = complete"));
        ExperimentConfig::parse(&inserted).unwrap();

        let appended = patch_config_text(&base, "output.cadence", "7").unwrap();
        let cfg = ExperimentConfig::parse(&appended).unwrap();
        assert_eq!(cfg.output.cadence, 7);

        // Same-named keys in other sections stay untouched.
        let sample = logistic_sample();
        let patched = patch_config_text(&sample, "output.directory", "elsewhere").unwrap();
        let cfg = ExperimentConfig::parse(&patched).unwrap();
        assert_eq!(cfg.output.directory, PathBuf::from("elsewhere"));
        match &cfg.data.as_ref().unwrap().source {
            DataSource::Synthetic { dim, .. } => assert_eq!(*dim, 6),
            other => panic!("wrong source {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_and_sections_are_rejected() {
        let dup_key = minimal_quadratic().replace("n = 8", "n = 8\nn = 9");
        let err = ExperimentConfig::parse(&dup_key).unwrap_err().to_string();
        assert!(err.contains("graph.n"), "unhelpful error: {err}");

        let dup_section = minimal_quadratic() + "\n[graph]\nkind = ring\n";
        let err = ExperimentConfig::parse(&dup_section).unwrap_err().to_string();
        assert!(err.contains("duplicate section"), "unhelpful error: {err}");
    }
}
