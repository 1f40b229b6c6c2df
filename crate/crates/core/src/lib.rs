//! Decentralized stochastic first-order optimization over peer-to-peer
//! graphs.
//!
//! Each of n nodes holds a private finite-sum objective; the network
//! minimizes the global average F(θ) = (1/n) Σ_i f_i(θ) while nodes talk
//! only to their graph neighbors through a doubly-stochastic mixing
//! matrix. The crate provides, from the bottom up:
//!
//! | module          | contents                                              |
//! |-----------------|-------------------------------------------------------|
//! | [`graph`]       | ring / complete / exponential / geometric topologies  |
//! | [`weights`]     | Metropolis mixing matrices and their spectral gap      |
//! | [`consensus`]   | blockwise mixing, dynamic average consensus            |
//! | [`objective`]   | component-oracle trait, smoothness constants           |
//! | [`quadratic`]   | synthetic quadratic problem instances                  |
//! | [`logistic`]    | regularized binary logistic regression                 |
//! | [`dataset`]     | IDX loading, class filtering, partitioning, synthesis  |
//! | [`schedule`]    | constant and harmonic step-size schedules              |
//! | [`centralized`] | single-machine SGD / SAGA / SVRG baselines             |
//! | [`decentralized`] | DSGD and the gradient-tracking family                |
//! | [`metrics`]     | traces, convergence metrics, rate fitting              |
//! | [`experiment`]  | config files, experiment harness, sweeps, plot data    |
//!
//! All stochastic runs are reproducible: one master seed derives one
//! ChaCha stream per node, so results are independent of thread count and
//! identical across repeats.

pub mod centralized;
pub mod config;
pub mod consensus;
pub mod dataset;
pub mod decentralized;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod graph;
pub mod logistic;
pub mod metrics;
pub mod objective;
pub mod quadratic;
pub mod rng;
pub mod schedule;
pub mod vr;
pub mod weights;

pub use centralized::{run_saga, run_saga_compact, run_sgd, run_svrg};
pub use config::{
    patch_config_text, AlgorithmConfig, AlphaPreset, AlphaSpec, DataConfig, DataSource,
    ExperimentConfig, GraphConfig, ObjectiveConfig, OutputConfig, ResolvedValues, ScheduleKind,
};
pub use error::{Error, Result};
pub use exec::Exec;
pub use experiment::{
    build_problem, emit_plot_data, resolve_run, run_experiment, run_experiment_labeled, run_label,
    sweep, BuiltObjective, BuiltProblem, ExperimentResult, ResolvedRun, XAxis, OUTPUT_ROOT_ENV,
};
pub use graph::{GraphKind, Topology};
pub use metrics::{EvalContext, FitResult, TestSet, Trace, TraceMetric, TraceRecord};
pub use dataset::{partition, synthetic_blobs, BlobConfig, Dataset, Partition, PartitionMode};
pub use decentralized::{
    communication_cost, run, run_dsgd, run_gt_dgd, run_gt_dsgd, run_gt_saga,
    run_gt_saga_compact, run_gt_svrg, Algorithm, NetworkState, NodeState, RunConfig,
};
pub use logistic::LogisticProblem;
pub use objective::{ComponentOracle, GlmOracle, LMode, PooledOracle, SmoothnessInfo};
pub use quadratic::QuadraticProblem;
pub use schedule::StepSchedule;
pub use vr::SvrgOption;
pub use weights::{spectral_gap, SpectralInfo, WeightMatrix, WeightRule};
