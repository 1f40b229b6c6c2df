//! From a parsed config to a run directory on disk.
//!
//! [`run_experiment`] drives the whole pipeline: build the topology and
//! mixing matrix, load or generate the data, construct the objective,
//! solve for the reference minimizer, translate the epoch budget into an
//! iteration count, run the configured method, and write three files into
//! a labeled subdirectory of the output root:
//!
//! * `config.echo`, the configuration with every default and preset
//!   resolved to an explicit value (reruns reproduce the run exactly),
//! * `trace.csv`, the metric trace,
//! * `summary.txt`, a human-readable digest of the instance and the final
//!   metrics.
//!
//! Nothing here reads the clock or any other ambient state except the
//! `PEERGRAD_OUTPUT_ROOT` environment variable, which redirects the output
//! root without touching the config file. Running the same config twice
//! produces byte-identical files.

use std::path::PathBuf;

use nalgebra::DVector;

use crate::centralized::{run_saga, run_sgd, run_svrg};
use crate::config::{
    AlphaPreset, AlphaSpec, DataConfig, DataSource, ExperimentConfig, ObjectiveConfig,
    ResolvedValues, ScheduleKind,
};
use crate::dataset::{partition, synthetic_blobs, BlobConfig, Dataset, PartitionMode};
use crate::decentralized::{
    communication_cost, run, run_gt_saga_compact, Algorithm, NetworkState, RunConfig,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::Topology;
use crate::logistic::LogisticProblem;
use crate::metrics::{fit_rate, plateau, EvalContext, TestSet, Trace, TraceMetric};
use crate::objective::{ComponentOracle, PooledOracle, SmoothnessInfo};
use crate::quadratic::QuadraticProblem;
use crate::schedule::StepSchedule;
use crate::weights::{spectral_gap, SpectralInfo, WeightMatrix};

/// Environment variable that overrides `output.directory`. Lets CI and
/// batch drivers redirect artifacts without editing config files.
pub const OUTPUT_ROOT_ENV: &str = "PEERGRAD_OUTPUT_ROOT";

/// Iteration cap for the reference solve. Accelerated descent reaches
/// gradient norms near 1e-10 in O(sqrt(kappa) log(1/tol)) steps, so this
/// is generous for any condition number the generators produce.
const REFERENCE_MAX_ITERS: u64 = 200_000;

/// Test samples generated per training sample for synthetic data.
const SYNTHETIC_TEST_FRACTION: usize = 5;

// ---------------------------------------------------------------------------
// built problem

/// The objective once data loading and generation are done.
pub enum BuiltObjective {
    Logistic(LogisticProblem),
    Quadratic(QuadraticProblem),
}

impl BuiltObjective {
    pub fn oracle(&self) -> &dyn ComponentOracle {
        match self {
            BuiltObjective::Logistic(p) => p,
            BuiltObjective::Quadratic(p) => p,
        }
    }

    pub fn as_logistic(&self) -> Option<&LogisticProblem> {
        match self {
            BuiltObjective::Logistic(p) => Some(p),
            BuiltObjective::Quadratic(_) => None,
        }
    }
}

/// Everything the optimizer and the metrics need, built once per run.
pub struct BuiltProblem {
    pub topology: Topology,
    pub weights: WeightMatrix,
    pub spectral: SpectralInfo,
    pub objective: BuiltObjective,
    pub theta_star: DVector<f64>,
    pub f_star: f64,
    pub test: Option<TestSet>,
    pub smoothness: SmoothnessInfo,
    /// Resolved regularizer when the objective is logistic.
    pub lambda_reg: Option<f64>,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<BuiltProblem> {
    let g = &cfg.graph;
    let topology = Topology::build(g.kind, g.n, g.radius, g.seed)?;
    let weights = WeightMatrix::build(&topology, cfg.weights)?;
    let spectral = spectral_gap(&weights)?;

    let (objective, test, lambda_reg) = match &cfg.objective {
        ObjectiveConfig::Quadratic { components, dim, eig_lo, eig_hi, hetero, jitter, ridge, seed } => {
            let q = QuadraticProblem::random(
                g.n, *components, *dim, (*eig_lo, *eig_hi), *hetero, *jitter, *ridge, *seed,
            )?;
            (BuiltObjective::Quadratic(q), None, None)
        }
        ObjectiveConfig::Logistic { lambda_reg, reference_tol: _ } => {
            let data = cfg.data.as_ref().ok_or_else(|| {
                Error::config("data", "the logistic objective requires a data section")
            })?;
            let (train, test) = load_logistic_data(data)?;
            let part = partition(&train, g.n, data.partition, data.partition_seed)?;
            let lambda = lambda_reg.unwrap_or(1.0 / train.len() as f64);
            let problem = LogisticProblem::new(&train, &part, lambda)?;
            (BuiltObjective::Logistic(problem), test, Some(lambda))
        }
    };

    let (theta_star, f_star) = match &objective {
        BuiltObjective::Quadratic(q) => {
            let star = q.minimizer()?;
            let f = q.global_value(&star);
            (star, f)
        }
        BuiltObjective::Logistic(p) => {
            let tol = match cfg.objective {
                ObjectiveConfig::Logistic { reference_tol, .. } => reference_tol,
                ObjectiveConfig::Quadratic { .. } => unreachable!(),
            };
            let star = p.reference_minimizer(tol, REFERENCE_MAX_ITERS)?;
            let f = p.global_value(&star);
            (star, f)
        }
    };

    let smoothness = objective.oracle().smoothness();
    Ok(BuiltProblem { topology, weights, spectral, objective, theta_star, f_star, test, smoothness, lambda_reg })
}

fn load_logistic_data(data: &DataConfig) -> Result<(Dataset, Option<TestSet>)> {
    let (train, test) = match &data.source {
        DataSource::Synthetic { samples, dim, separation, noise, seed } => {
            // One draw split into train and held-out tail: the class
            // direction is part of the draw, so a second draw on another
            // seed would pose a different classification problem.
            let test_n = (*samples / SYNTHETIC_TEST_FRACTION).max(1);
            let full = synthetic_blobs(&BlobConfig {
                samples: *samples + test_n,
                dim: *dim,
                separation: *separation,
                noise: *noise,
                seed: *seed,
            })?;
            let train = Dataset::new(
                full.features.rows(0, *samples).into_owned(),
                full.labels[..*samples].to_vec(),
            )?;
            let test = Dataset::new(
                full.features.rows(*samples, test_n).into_owned(),
                full.labels[*samples..].to_vec(),
            )?;
            (train, Some(test))
        }
        DataSource::Idx { images, labels, classes, test_images, test_labels } => {
            let train = Dataset::from_idx(images, labels)?.binarize(classes.0, classes.1)?;
            let test = match (test_images, test_labels) {
                (Some(ti), Some(tl)) => {
                    Some(Dataset::from_idx(ti, tl)?.binarize(classes.0, classes.1)?)
                }
                _ => None,
            };
            (train, test)
        }
    };
    let (train, test) = if data.normalize {
        let train = train.normalize_unit()?;
        let test = test.map(|t| t.normalize_unit()).transpose()?;
        (train, test)
    } else {
        (train, test)
    };
    let test = test.map(|t| t.to_test_set()).transpose()?;
    Ok((train, test))
}

/// The training dataset and node assignment a config resolves to, built
/// without running anything. Backs the CLI's partition inspector.
pub fn load_split(cfg: &ExperimentConfig) -> Result<(Dataset, crate::dataset::Partition)> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::config("data", "partition inspection requires a data section"))?;
    let (train, _) = load_logistic_data(data)?;
    let part = partition(&train, cfg.graph.n, data.partition, data.partition_seed)?;
    Ok((train, part))
}

// ---------------------------------------------------------------------------
// resolution: presets, inner loops, budgets

/// The symbolic parts of a config pinned to numbers for one run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub schedule: StepSchedule,
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    pub t_inner: Option<u64>,
    /// Iterations handed to the runner: rounds for single-loop methods,
    /// outer loops for double-loop ones.
    pub iterations: u64,
}

impl ResolvedRun {
    pub fn echo_values(&self, problem: &BuiltProblem) -> ResolvedValues {
        ResolvedValues {
            alpha: self.alpha,
            c: self.c,
            t_inner: self.t_inner,
            lambda_reg: problem.lambda_reg,
        }
    }
}

fn preset_alpha(preset: AlphaPreset, algo: Algorithm, sm: &SmoothnessInfo, lambda: f64) -> f64 {
    match preset {
        AlphaPreset::OneOverL => 1.0 / sm.global_l,
        AlphaPreset::Theoretical => {
            let gap = 1.0 - lambda;
            match algo {
                Algorithm::Sgd | Algorithm::Dsgd => 1.0 / (2.0 * sm.global_l),
                Algorithm::Saga => 1.0 / (3.0 * sm.component_l),
                Algorithm::Svrg => 1.0 / (10.0 * sm.component_l),
                Algorithm::GtDgd => gap * gap / (2.0 * sm.global_l),
                Algorithm::GtDsgd | Algorithm::GtSaga | Algorithm::GtSvrg => {
                    gap * gap * sm.mu / (sm.component_l * sm.component_l)
                }
            }
        }
    }
}

pub fn resolve_run(cfg: &ExperimentConfig, problem: &BuiltProblem) -> Result<ResolvedRun> {
    let a = &cfg.algorithm;
    let sm = &problem.smoothness;
    let oracle = problem.objective.oracle();
    let n_total = oracle.total_components() as u64;
    let max_m = (0..oracle.num_nodes()).map(|i| oracle.components(i)).max().unwrap_or(1) as u64;

    let (schedule, alpha, c) = match a.schedule {
        ScheduleKind::Constant => {
            let v = match a.alpha.expect("parse guarantees an alpha spec for constant schedules") {
                AlphaSpec::Explicit(v) => v,
                AlphaSpec::Preset(p) => preset_alpha(p, a.name, sm, problem.spectral.lambda),
            };
            (StepSchedule::constant(v)?, Some(v), None)
        }
        ScheduleKind::Harmonic => {
            if matches!(a.name, Algorithm::Saga | Algorithm::Svrg) {
                return Err(Error::config(
                    "algorithm.schedule",
                    format!("{} uses a constant step size", a.name),
                ));
            }
            let v = a.c.unwrap_or(1.0 / sm.mu);
            (StepSchedule::harmonic(v)?, None, Some(v))
        }
    };

    // One epoch of inner steps per outer loop, stretched by 4x when the
    // partition is unbalanced so the largest node still completes a pass.
    let t_inner = if a.name.has_inner_loop() {
        let given = a.t_inner;
        let runner_nodes = if a.name.is_decentralized() { cfg.graph.n as u64 } else { 1 };
        let factor = match cfg.data.as_ref().map(|d| d.partition) {
            Some(PartitionMode::UnbalancedSingleClass) => 4,
            _ => 1,
        };
        let default = ((factor * n_total) as f64 / runner_nodes as f64).round().max(1.0) as u64;
        Some(given.unwrap_or(default))
    } else {
        None
    };

    let iterations = budget_iterations(a.name, a.budget_epochs, n_total, cfg.graph.n as u64, max_m, t_inner);
    Ok(ResolvedRun { schedule, alpha, c, t_inner, iterations })
}

/// Translate an epoch budget into the iteration argument of each runner so
/// no method exceeds `budget_epochs * N/n` gradient evaluations per node
/// (N for the pooled centralized baselines). Every method gets at least
/// one iteration regardless of how small the budget is.
fn budget_iterations(
    algo: Algorithm,
    epochs: u64,
    n_total: u64,
    n_nodes: u64,
    max_m: u64,
    t_inner: Option<u64>,
) -> u64 {
    let budget = |nodes: u64| (epochs as f64 * n_total as f64 / nodes as f64).round() as u64;
    match algo {
        Algorithm::Sgd => budget(1).max(1),
        Algorithm::Saga => budget(1).saturating_sub(n_total).max(1),
        Algorithm::Svrg => {
            let t = t_inner.expect("double-loop methods resolve t_inner");
            (budget(1) / (n_total + 2 * t)).max(1)
        }
        Algorithm::Dsgd => budget(n_nodes).max(1),
        Algorithm::GtDgd => (budget(n_nodes) / max_m).saturating_sub(1).max(1),
        Algorithm::GtDsgd => budget(n_nodes).saturating_sub(1).max(1),
        Algorithm::GtSaga => budget(n_nodes).saturating_sub(max_m).max(1),
        Algorithm::GtSvrg => {
            let t = t_inner.expect("double-loop methods resolve t_inner");
            (budget(n_nodes) / (max_m + 2 * t)).max(1)
        }
    }
}

// ---------------------------------------------------------------------------
// run

pub struct ExperimentResult {
    pub label: String,
    pub run_dir: PathBuf,
    pub echo: String,
    pub summary: String,
    pub trace: Trace,
}

/// Default label: method plus master seed, filesystem-safe.
pub fn run_label(cfg: &ExperimentConfig) -> String {
    format!("{}_seed{}", cfg.algorithm.name, cfg.seed)
}

fn sanitize_label(raw: &str) -> String {
    raw.chars()
        .map(|ch| if ch.is_ascii_alphanumeric() || matches!(ch, '.' | '_' | '-') { ch } else { '-' })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_labeled(cfg, None)
}

/// As [`run_experiment`] with an extra label suffix, used by sweeps to
/// keep the runs for different parameter values in separate directories.
pub fn run_experiment_labeled(cfg: &ExperimentConfig, suffix: Option<&str>) -> Result<ExperimentResult> {
    let problem = build_problem(cfg)?;
    let resolved = resolve_run(cfg, &problem)?;

    let mut ctx = EvalContext::every(cfg.output.cadence)
        .with_optimum(problem.theta_star.clone(), problem.f_star);
    ctx.test = problem.test.clone();

    let trace = execute(cfg, &problem, &resolved, &ctx)?;

    let mut label = run_label(cfg);
    if let Some(s) = suffix {
        label.push_str("__");
        label.push_str(&sanitize_label(s));
    }

    let echo = cfg.echo(&resolved.echo_values(&problem));
    let summary = render_summary(cfg, &problem, &resolved, &trace, &label);

    let root = match std::env::var(OUTPUT_ROOT_ENV) {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => cfg.output.directory.clone(),
    };
    let run_dir = root.join(&label);
    std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(run_dir.display().to_string(), e))?;
    let write = |name: &str, body: &str| -> Result<()> {
        let path = run_dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))
    };
    write("config.echo", &echo)?;
    write("trace.csv", &trace.to_csv())?;
    write("summary.txt", &summary)?;

    Ok(ExperimentResult { label, run_dir, echo, summary, trace })
}

fn execute(
    cfg: &ExperimentConfig,
    problem: &BuiltProblem,
    r: &ResolvedRun,
    ctx: &EvalContext,
) -> Result<Trace> {
    let algo = cfg.algorithm.name;
    let seed = cfg.seed;
    let oracle = problem.objective.oracle();
    if algo.is_decentralized() {
        let exec = Exec::new(std::thread::available_parallelism().map_or(1, |p| p.get()));
        let mut network = NetworkState::new(cfg.graph.n, oracle.dim())?;
        let mut run_cfg = RunConfig::new(algo, r.schedule, r.iterations, seed);
        if let Some(t) = r.t_inner {
            run_cfg = run_cfg.with_inner(t, cfg.algorithm.svrg_option);
        }
        if cfg.algorithm.compact_table {
            let glm = problem
                .objective
                .as_logistic()
                .expect("parse fences compact tables to the logistic objective");
            return run_gt_saga_compact(&mut network, glm, &problem.weights, &run_cfg, ctx, &exec);
        }
        match &problem.objective {
            BuiltObjective::Logistic(p) => run(&mut network, p, &problem.weights, &run_cfg, ctx, &exec),
            BuiltObjective::Quadratic(q) => run(&mut network, q, &problem.weights, &run_cfg, ctx, &exec),
        }
    } else {
        let pooled = PooledOracle::new(oracle)?;
        match algo {
            Algorithm::Sgd => run_sgd(&pooled, r.schedule, r.iterations, seed, ctx),
            Algorithm::Saga => {
                let alpha = r.alpha.expect("resolve_run rejects harmonic saga");
                run_saga(&pooled, alpha, r.iterations, seed, ctx)
            }
            Algorithm::Svrg => {
                let alpha = r.alpha.expect("resolve_run rejects harmonic svrg");
                let t = r.t_inner.expect("double-loop methods resolve t_inner");
                run_svrg(&pooled, alpha, t, r.iterations, cfg.algorithm.svrg_option, seed, ctx)
            }
            _ => unreachable!("decentralized methods are handled above"),
        }
    }
}

// ---------------------------------------------------------------------------
// summary

fn render_summary(
    cfg: &ExperimentConfig,
    problem: &BuiltProblem,
    r: &ResolvedRun,
    trace: &Trace,
    label: &str,
) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let w = &mut s;
    let oracle = problem.objective.oracle();
    let a = &cfg.algorithm;

    let _ = writeln!(w, "run: {label}");
    let _ = writeln!(w, "version: {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(w, "master_seed: {}", cfg.seed);
    let _ = writeln!(w, "algorithm: {}", a.name);
    let _ = writeln!(
        w,
        "graph: {} n={} edges={} max_degree={}",
        cfg.graph.kind,
        problem.topology.n(),
        problem.topology.edge_count(),
        problem.topology.max_degree()
    );
    let _ = writeln!(
        w,
        "weights: {} lambda={:.6} spectral_gap={:.6}",
        cfg.weights,
        problem.spectral.lambda,
        1.0 - problem.spectral.lambda
    );
    let objective_name = match &problem.objective {
        BuiltObjective::Logistic(_) => "logistic",
        BuiltObjective::Quadratic(_) => "quadratic",
    };
    let _ = writeln!(
        w,
        "objective: {} N={} dim={}{}",
        objective_name,
        oracle.total_components(),
        oracle.dim(),
        problem
            .lambda_reg
            .map(|l| format!(" lambda_reg={l}"))
            .unwrap_or_default()
    );
    let sm = &problem.smoothness;
    let _ = writeln!(
        w,
        "smoothness: L_component={:.6} L_global={:.6} mu={:.6e} kappa={:.3}",
        sm.component_l,
        sm.global_l,
        sm.mu,
        sm.global_l / sm.mu
    );
    match (r.alpha, r.c) {
        (Some(alpha), _) => {
            let _ = writeln!(w, "step: constant alpha={alpha}");
        }
        (None, Some(c)) => {
            let _ = writeln!(w, "step: harmonic c={c}");
        }
        (None, None) => {}
    }
    if let Some(t) = r.t_inner {
        let _ = writeln!(w, "inner_loop: t_inner={} option={}", t, a.svrg_option);
    }
    let unit = if a.name.has_inner_loop() { "outer loops" } else { "iterations" };
    let _ = writeln!(w, "budget: {} epochs -> {} {}", a.budget_epochs, r.iterations, unit);

    let _ = writeln!(w, "records: {}", trace.records.len());
    if let Some(last) = trace.last() {
        let _ = writeln!(w, "final_epoch: {:.3}", last.epoch);
        let _ = writeln!(w, "final_grad_evals_per_node: {}", last.grad_evals_per_node);
        let _ = writeln!(w, "final_comm_rounds_per_node: {}", last.comm_rounds_per_node);
        if a.name.is_decentralized() {
            let total: u64 = communication_cost(trace, &problem.topology).iter().sum();
            let _ = writeln!(w, "total_transmissions: {total}");
        }
        let _ = writeln!(w, "final_optimality_gap: {:.6e}", last.optimality_gap);
        let _ = writeln!(w, "final_mse: {:.6e}", last.mse);
        let _ = writeln!(w, "final_consensus_error: {:.6e}", last.consensus_error);
        let _ = writeln!(w, "final_tracking_residual: {:.6e}", last.tracking_residual);
        if let Some(acc) = last.test_accuracy {
            let _ = writeln!(w, "final_test_accuracy: {acc:.4}");
        }
        // Decay diagnostics where they are defined: the fit needs the
        // metric positive over the whole run, the plateau needs the tail
        // to have flattened.
        if let Ok(fit) = fit_rate(trace, TraceMetric::Mse, (0, last.k)) {
            let _ = writeln!(w, "mse_log_slope_per_round: {:.6e}", fit.slope);
            let _ = writeln!(w, "mse_fit_r2: {:.4}", fit.r2);
        }
        if let Some(p) = plateau(trace, TraceMetric::Mse) {
            let _ = writeln!(w, "mse_plateau: {p:.6e}");
        }
    }
    s
}

// ---------------------------------------------------------------------------
// sweeps and plot data

/// Run one experiment per value of a swept key. Each run patches the raw
/// config text, re-parses it under full validation, and lands in its own
/// directory labeled by the swept value.
pub fn sweep(base_text: &str, key_path: &str, values: &[String]) -> Result<Vec<ExperimentResult>> {
    if values.is_empty() {
        return Err(Error::config(key_path, "sweep needs at least one value"));
    }
    let key_leaf = key_path.rsplit('.').next().unwrap_or(key_path);
    let mut results = Vec::with_capacity(values.len());
    for value in values {
        let patched = crate::config::patch_config_text(base_text, key_path, value)?;
        let cfg = ExperimentConfig::parse(&patched)?;
        let suffix = format!("{key_leaf}-{value}");
        results.push(run_experiment_labeled(&cfg, Some(&suffix))?);
    }
    Ok(results)
}

/// Abscissa for comparison plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Epoch,
    GradEvals,
    CommRounds,
}

impl XAxis {
    pub fn name(&self) -> &'static str {
        match self {
            XAxis::Epoch => "epoch",
            XAxis::GradEvals => "grad_evals",
            XAxis::CommRounds => "comm_rounds",
        }
    }
}

impl std::str::FromStr for XAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epoch" => Ok(XAxis::Epoch),
            "grad_evals" => Ok(XAxis::GradEvals),
            "comm_rounds" => Ok(XAxis::CommRounds),
            other => Err(Error::Invalid(format!(
                "unknown x axis `{other}` (expected epoch, grad_evals, comm_rounds)"
            ))),
        }
    }
}

/// Flatten traces into one long-format CSV, `run_label,x,metric,value`,
/// ready for any plotting tool. Rows appear in run order, then record
/// order, then metric order; the test accuracy column is emitted only for
/// runs that track it. Accepts any labeled traces so freshly computed
/// results and `trace.csv` files read back from run directories plot the
/// same way.
pub fn emit_plot_data<'a, I>(runs: I, x: XAxis) -> String
where
    I: IntoIterator<Item = (&'a str, &'a Trace)>,
{
    use std::fmt::Write as _;
    let mut out = String::from("run_label,x,metric,value\n");
    for (label, trace) in runs {
        for rec in &trace.records {
            let xv = match x {
                XAxis::Epoch => rec.epoch,
                XAxis::GradEvals => rec.grad_evals_per_node as f64,
                XAxis::CommRounds => rec.comm_rounds_per_node as f64,
            };
            let mut row = |metric: &str, value: f64| {
                let _ = writeln!(out, "{label},{xv},{metric},{value:e}");
            };
            row("optimality_gap", rec.optimality_gap);
            row("mse", rec.mse);
            row("consensus_error", rec.consensus_error);
            row("tracking_residual", rec.tracking_residual);
            if let Some(acc) = rec.test_accuracy {
                row("test_accuracy", acc);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decentralized::Algorithm;

    fn tiny_quadratic_config(algo: &str) -> ExperimentConfig {
        let text = format!(
            "[experiment]\nseed = 11\n\n[graph]\nkind = ring\nn = 4\n\n[objective]\nkind = quadratic\ncomponents = 6\ndim = 3\n\n[algorithm]\nname = {algo}\nbudget_epochs = 4\n\n[output]\ndirectory = unused\ncadence = 5\n"
        );
        ExperimentConfig::parse(&text).unwrap()
    }

    #[test]
    fn budgets_cap_per_node_evaluations() {
        // N = 24 over 4 nodes, so the per-node budget is 4 * 6 = 24 evals
        // (24 * 24 for the pooled centralized methods).
        let cases: [(Algorithm, u64); 8] = [
            (Algorithm::Sgd, 96),
            (Algorithm::Saga, 72),
            (Algorithm::Svrg, 1),
            (Algorithm::Dsgd, 24),
            (Algorithm::GtDgd, 3),
            (Algorithm::GtDsgd, 23),
            (Algorithm::GtSaga, 18),
            (Algorithm::GtSvrg, 1),
        ];
        for (algo, expect) in cases {
            let t = algo.has_inner_loop().then_some(if algo.is_decentralized() { 6 } else { 24 });
            let got = budget_iterations(algo, 4, 24, 4, 6, t);
            assert_eq!(got, expect, "{algo}");
        }
        // Tiny budgets never stall at zero iterations.
        assert_eq!(budget_iterations(Algorithm::GtSaga, 1, 24, 4, 6, None), 1);
        assert_eq!(budget_iterations(Algorithm::GtSvrg, 1, 24, 4, 6, Some(24)), 1);
    }

    #[test]
    fn resolver_pins_presets_and_inner_loops() {
        let cfg = tiny_quadratic_config("gt_svrg");
        let problem = build_problem(&cfg).unwrap();
        let r = resolve_run(&cfg, &problem).unwrap();
        let expect = 1.0 / problem.smoothness.global_l;
        assert_eq!(r.alpha, Some(expect));
        // Balanced quadratic: one epoch of inner steps is N/n = 6.
        assert_eq!(r.t_inner, Some(6));
        assert!(r.iterations >= 1);

        let harmonic = ExperimentConfig::parse(
            "[graph]\nkind = ring\nn = 4\n\n[objective]\nkind = quadratic\ncomponents = 6\ndim = 3\n\n[algorithm]\nname = dsgd\nschedule = harmonic\nbudget_epochs = 2\n",
        )
        .unwrap();
        let r = resolve_run(&harmonic, &problem).unwrap();
        assert_eq!(r.c, Some(1.0 / problem.smoothness.mu));

        let bad = ExperimentConfig::parse(
            "[graph]\nkind = ring\nn = 4\n\n[objective]\nkind = quadratic\ncomponents = 6\ndim = 3\n\n[algorithm]\nname = saga\nschedule = harmonic\nbudget_epochs = 2\n",
        )
        .unwrap();
        let err = resolve_run(&bad, &problem).unwrap_err().to_string();
        assert!(err.contains("constant step"), "unhelpful error: {err}");
    }

    #[test]
    fn run_directories_hold_echo_trace_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_quadratic_config("gt_saga");
        cfg.output.directory = dir.path().to_path_buf();
        let res = run_experiment(&cfg).unwrap();

        assert_eq!(res.label, "gt_saga_seed11");
        assert_eq!(res.run_dir, dir.path().join("gt_saga_seed11"));
        for name in ["config.echo", "trace.csv", "summary.txt"] {
            assert!(res.run_dir.join(name).is_file(), "missing {name}");
        }

        // The echo parses and pins the preset numerically.
        let echoed = ExperimentConfig::parse(&res.echo).unwrap();
        match echoed.algorithm.alpha {
            Some(AlphaSpec::Explicit(v)) => assert!(v > 0.0),
            other => panic!("echo left alpha symbolic: {other:?}"),
        }
        // Rerunning the echoed config reproduces the trace byte for byte.
        let rerun = run_experiment(&ExperimentConfig {
            output: cfg.output.clone(),
            ..echoed
        })
        .unwrap();
        assert_eq!(rerun.trace.to_csv(), res.trace.to_csv());
        assert_eq!(rerun.summary, res.summary);

        let summary = &res.summary;
        for needle in ["run: gt_saga_seed11", "algorithm: gt_saga", "budget: 4 epochs", "final_mse"] {
            assert!(summary.contains(needle), "summary lacks `{needle}`:\n{summary}");
        }
    }

    #[test]
    fn sweep_isolates_runs_and_plot_data_is_long_format() {
        let dir = tempfile::tempdir().unwrap();
        let base = format!(
            "[graph]\nkind = complete\nn = 3\n\n[objective]\nkind = quadratic\ncomponents = 4\ndim = 2\n\n[algorithm]\nname = dsgd\nalpha = 0.05\nbudget_epochs = 3\n\n[output]\ndirectory = {}\ncadence = 4\n",
            dir.path().display()
        );
        let values = vec!["0.02".to_string(), "0.05".to_string()];
        let results = sweep(&base, "algorithm.alpha", &values).unwrap();
        assert_eq!(results.len(), 2);
        assert_eq!(results[0].label, "dsgd_seed0__alpha-0.02");
        assert_eq!(results[1].label, "dsgd_seed0__alpha-0.05");
        assert_ne!(results[0].trace.to_csv(), results[1].trace.to_csv());
        for r in &results {
            assert!(r.run_dir.join("trace.csv").is_file());
        }

        let long = emit_plot_data(
            results.iter().map(|r| (r.label.as_str(), &r.trace)),
            XAxis::GradEvals,
        );
        let mut lines = long.lines();
        assert_eq!(lines.next(), Some("run_label,x,metric,value"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("dsgd_seed0__alpha-0.02,0,optimality_gap,"), "row: {first}");
        // 2 runs x records x 4 metrics and nothing else (no test set).
        let rows = long.lines().count() - 1;
        let records: usize = results.iter().map(|r| r.trace.records.len()).sum();
        assert_eq!(rows, records * 4);
        assert!(!long.contains("test_accuracy"));
    }

    #[test]
    fn synthetic_logistic_runs_score_test_accuracy() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "[experiment]\nseed = 3\n\n[graph]\nkind = complete\nn = 4\n\n[data]\nsource = synthetic\nsamples = 120\ndim = 4\nseparation = 4.0\nnoise = 0.8\n\n[objective]\nkind = logistic\n\n[algorithm]\nname = gt_dsgd\nbudget_epochs = 30\n\n[output]\ndirectory = {}\ncadence = 100\n",
            dir.path().display()
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let res = run_experiment(&cfg).unwrap();
        let last = res.trace.last().unwrap();
        let acc = last.test_accuracy.expect("synthetic runs hold out a test set");
        assert!(acc > 0.9, "separable blobs should classify well, got {acc}");
        assert!(last.mse.is_finite() && last.mse < 1.0, "mse {}", last.mse);
        assert!(res.summary.contains("final_test_accuracy"));
        // Echo pinned the default regularizer to 1/N.
        let echoed = ExperimentConfig::parse(&res.echo).unwrap();
        match echoed.objective {
            ObjectiveConfig::Logistic { lambda_reg, .. } => {
                assert_eq!(lambda_reg, Some(1.0 / 120.0));
            }
            other => panic!("wrong objective {other:?}"),
        }
    }
}
