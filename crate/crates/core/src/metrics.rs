//! Run instrumentation: convergence metrics, traces, and curve fitting.
//!
//! Optimizers call into a [`Recorder`] at a fixed cadence; it snapshots
//!
//! * optimality gap F(θ̄) − F* (or ‖∇F(θ̄)‖ when no minimizer is known,
//!   flagged on the trace),
//! * mean squared distance to the minimizer (1/n) Σ ‖θ_i − θ*‖²,
//! * consensus error (1/n) Σ ‖θ_i − θ̄‖²,
//! * tracking residual ‖mean(tracker) − mean(estimator)‖,
//! * test accuracy when a held-out set is attached.
//!
//! Metric evaluation never touches the gradient-evaluation counters; the
//! counters measure optimization work only.
//!
//! Traces serialize to CSV with one header row and full round-trip float
//! precision. Curve fitting (linear rates, sublinear log-log slopes,
//! steady-state plateaus) operates on recorded traces.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objective::ComponentOracle;

// ---------------------------------------------------------------------------
// point metrics

/// (1/n) Σ_i ‖θ_i − θ̄‖².
pub fn consensus_error(states: &[DVector<f64>]) -> f64 {
    let mean = crate::consensus::network_mean(states);
    states.iter().map(|b| (b - &mean).norm_squared()).sum::<f64>() / states.len() as f64
}

/// (1/n) Σ_i ‖θ_i − θ*‖².
pub fn mse_to(states: &[DVector<f64>], theta_star: &DVector<f64>) -> f64 {
    states.iter().map(|b| (b - theta_star).norm_squared()).sum::<f64>() / states.len() as f64
}

/// ‖mean(trackers) − mean(estimators)‖. Exactly zero (up to rounding) for
/// gradient-tracking iterations, by the dynamic-average-consensus identity.
pub fn tracking_residual(trackers: &[DVector<f64>], estimators: &[DVector<f64>]) -> f64 {
    let d = crate::consensus::network_mean(trackers);
    let g = crate::consensus::network_mean(estimators);
    (d - g).norm()
}

/// Held-out evaluation set for classification accuracy.
#[derive(Debug, Clone)]
pub struct TestSet {
    /// One sample per row.
    pub features: DMatrix<f64>,
    /// ±1 labels, one per row.
    pub labels: Vec<f64>,
}

/// Fraction of test samples whose sign(bᵀx + c) matches the label, with
/// sign(0) = +1. θ packs [b; c].
pub fn accuracy(theta: &DVector<f64>, test: &TestSet) -> f64 {
    let d = test.features.ncols();
    assert_eq!(theta.len(), d + 1, "theta must pack d weights plus a bias");
    let b = theta.rows(0, d);
    let c = theta[d];
    let mut hits = 0usize;
    for (row, &y) in test.labels.iter().enumerate() {
        let z = test.features.row(row).transpose().dot(&b) + c;
        let pred = if z >= 0.0 { 1.0 } else { -1.0 };
        if pred == y {
            hits += 1;
        }
    }
    hits as f64 / test.labels.len() as f64
}

// ---------------------------------------------------------------------------
// traces

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Round counter (inner rounds for double-loop methods).
    pub k: u64,
    /// Per-node gradient work in units of N/n evaluations.
    pub epoch: f64,
    /// Largest per-node gradient-evaluation counter.
    pub grad_evals_per_node: u64,
    /// Communication rounds so far (identical across nodes).
    pub comm_rounds_per_node: u64,
    /// F(θ̄) − F*, or ‖∇F(θ̄)‖ when the trace is flagged.
    pub optimality_gap: f64,
    /// NaN when no minimizer is attached.
    pub mse: f64,
    pub consensus_error: f64,
    pub tracking_residual: f64,
    /// None when no test set is attached.
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// True when optimality_gap actually holds ‖∇F(θ̄)‖ because no
    /// minimizer was available.
    pub gap_is_grad_norm: bool,
    /// Full stacked iterate per round, only when iterate recording was
    /// requested (equivalence tests); empty otherwise.
    pub iterates: Vec<DVector<f64>>,
}

pub const TRACE_HEADER: &str = "k,epoch,grad_evals_per_node,comm_rounds_per_node,optimality_gap,mse,consensus_error,tracking_residual,test_accuracy";

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        // Display for f64 is the shortest string that parses back exactly.
        format!("{x}")
    }
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.k,
                fmt_float(r.epoch),
                r.grad_evals_per_node,
                r.comm_rounds_per_node,
                fmt_float(r.optimality_gap),
                fmt_float(r.mse),
                fmt_float(r.consensus_error),
                fmt_float(r.tracking_residual),
                r.test_accuracy.map(fmt_float).unwrap_or_default(),
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Invalid("empty trace file".into()))?;
        if header != TRACE_HEADER {
            return Err(Error::Invalid(format!("unexpected trace header `{header}`")));
        }
        let mut records = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::Invalid(format!(
                    "trace line {}: expected 9 fields, found {}",
                    ln + 2,
                    fields.len()
                )));
            }
            let int = |s: &str, what: &str| -> Result<u64> {
                s.parse().map_err(|_| Error::Invalid(format!("trace line {}: bad {what} `{s}`", ln + 2)))
            };
            let float = |s: &str, what: &str| -> Result<f64> {
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse().map_err(|_| Error::Invalid(format!("trace line {}: bad {what} `{s}`", ln + 2)))
                }
            };
            records.push(TraceRecord {
                k: int(fields[0], "k")?,
                epoch: float(fields[1], "epoch")?,
                grad_evals_per_node: int(fields[2], "grad_evals_per_node")?,
                comm_rounds_per_node: int(fields[3], "comm_rounds_per_node")?,
                optimality_gap: float(fields[4], "optimality_gap")?,
                mse: float(fields[5], "mse")?,
                consensus_error: float(fields[6], "consensus_error")?,
                tracking_residual: float(fields[7], "tracking_residual")?,
                test_accuracy: if fields[8].is_empty() {
                    None
                } else {
                    Some(float(fields[8], "test_accuracy")?)
                },
            });
        }
        Ok(Trace { records, gap_is_grad_norm: false, iterates: Vec::new() })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv(&text)
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Which column of a trace a fit or plateau should look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMetric {
    OptimalityGap,
    Mse,
    ConsensusError,
    TrackingResidual,
    TestAccuracy,
}

impl TraceMetric {
    pub fn name(&self) -> &'static str {
        match self {
            TraceMetric::OptimalityGap => "optimality_gap",
            TraceMetric::Mse => "mse",
            TraceMetric::ConsensusError => "consensus_error",
            TraceMetric::TrackingResidual => "tracking_residual",
            TraceMetric::TestAccuracy => "test_accuracy",
        }
    }

    pub fn get(&self, r: &TraceRecord) -> f64 {
        match self {
            TraceMetric::OptimalityGap => r.optimality_gap,
            TraceMetric::Mse => r.mse,
            TraceMetric::ConsensusError => r.consensus_error,
            TraceMetric::TrackingResidual => r.tracking_residual,
            TraceMetric::TestAccuracy => r.test_accuracy.unwrap_or(f64::NAN),
        }
    }
}

// ---------------------------------------------------------------------------
// recorder

/// Everything a run needs to evaluate metrics. Optimizers treat this as
/// read-only context.
#[derive(Default)]
pub struct EvalContext {
    pub theta_star: Option<DVector<f64>>,
    pub f_star: Option<f64>,
    pub test: Option<TestSet>,
    /// Record every `cadence` rounds (round 0 and the final round are
    /// always recorded). Zero is normalized to 1.
    pub cadence: u64,
    /// Keep the full stacked iterate every round. Off by default: this is
    /// for trajectory-equivalence tests, not production runs.
    pub record_iterates: bool,
}

impl EvalContext {
    pub fn every(cadence: u64) -> Self {
        EvalContext { cadence, ..Default::default() }
    }

    pub fn with_optimum(mut self, theta_star: DVector<f64>, f_star: f64) -> Self {
        self.theta_star = Some(theta_star);
        self.f_star = Some(f_star);
        self
    }

    pub fn recording_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }
}

/// Builds a [`Trace`] from state snapshots handed over by an optimizer.
pub struct Recorder<'a> {
    ctx: &'a EvalContext,
    oracle: &'a dyn ComponentOracle,
    /// N/n, the per-node evaluation count that makes up one epoch.
    epoch_unit: f64,
    trace: Trace,
    final_round: u64,
}

impl<'a> Recorder<'a> {
    pub fn new(ctx: &'a EvalContext, oracle: &'a dyn ComponentOracle, final_round: u64) -> Self {
        let n = oracle.num_nodes() as f64;
        let epoch_unit = oracle.total_components() as f64 / n;
        let trace = Trace {
            records: Vec::new(),
            gap_is_grad_norm: ctx.theta_star.is_none() || ctx.f_star.is_none(),
            iterates: Vec::new(),
        };
        Recorder { ctx, oracle, epoch_unit, trace, final_round }
    }

    pub fn due(&self, k: u64) -> bool {
        let c = self.ctx.cadence.max(1);
        k.is_multiple_of(c) || k == self.final_round
    }

    /// Snapshot the network state. `trackers` and `estimators` are empty
    /// slices for methods that have none; their metrics read as zero.
    pub fn record(
        &mut self,
        k: u64,
        grad_evals_per_node: u64,
        comm_rounds: u64,
        states: &[DVector<f64>],
        trackers: &[DVector<f64>],
        estimators: &[DVector<f64>],
    ) {
        if self.ctx.record_iterates {
            let p = states[0].len();
            let mut stacked = DVector::zeros(states.len() * p);
            for (i, s) in states.iter().enumerate() {
                stacked.rows_mut(i * p, p).copy_from(s);
            }
            self.trace.iterates.push(stacked);
        }
        if !self.due(k) {
            return;
        }
        let mean = crate::consensus::network_mean(states);
        let (gap, mse) = match (&self.ctx.theta_star, self.ctx.f_star) {
            (Some(star), Some(f_star)) => {
                (self.oracle.global_value(&mean) - f_star, mse_to(states, star))
            }
            _ => (self.oracle.global_gradient(&mean).norm(), f64::NAN),
        };
        let consensus = if states.len() > 1 { consensus_error(states) } else { 0.0 };
        let residual = if trackers.is_empty() || estimators.is_empty() {
            0.0
        } else {
            tracking_residual(trackers, estimators)
        };
        let test_accuracy = self.ctx.test.as_ref().map(|t| accuracy(&mean, t));
        self.trace.records.push(TraceRecord {
            k,
            epoch: grad_evals_per_node as f64 / self.epoch_unit,
            grad_evals_per_node,
            comm_rounds_per_node: comm_rounds,
            optimality_gap: gap,
            mse,
            consensus_error: consensus,
            tracking_residual: residual,
            test_accuracy,
        });
    }

    pub fn finish(self) -> Trace {
        self.trace
    }
}

// ---------------------------------------------------------------------------
// fitting

#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares on prepared (x, y) points.
pub fn log_linear_fit_points(pts: &[(f64, f64)]) -> FitResult {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for &(x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    FitResult { slope, intercept, r2 }
}

fn fit_points(
    trace: &Trace,
    metric: TraceMetric,
    k_window: (u64, u64),
    log_x: bool,
) -> Result<FitResult> {
    let mut pts = Vec::new();
    let mut hit_nonpositive = false;
    for r in &trace.records {
        if r.k < k_window.0 || r.k > k_window.1 {
            continue;
        }
        let y = metric.get(r);
        if y.is_nan() {
            return Err(Error::Invalid(format!(
                "metric {} is not populated in this trace",
                metric.name()
            )));
        }
        // A metric that hits exact zero (or rounds negative at the floor)
        // ends the usable fit range; fit over the positive prefix.
        if y <= 0.0 {
            hit_nonpositive = true;
        }
        if hit_nonpositive {
            continue;
        }
        let x = if log_x {
            if r.k == 0 {
                continue;
            }
            (r.k as f64).ln()
        } else {
            r.k as f64
        };
        pts.push((x, y.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::Invalid(format!(
            "fewer than two positive {} records in rounds {}..={}",
            metric.name(),
            k_window.0,
            k_window.1
        )));
    }
    Ok(log_linear_fit_points(&pts))
}

/// Fit log(metric) against the round counter. `slope` is per round; the
/// per-round contraction factor is e^slope.
pub fn fit_rate(trace: &Trace, metric: TraceMetric, k_window: (u64, u64)) -> Result<FitResult> {
    fit_points(trace, metric, k_window, false)
}

/// Fit log(metric) against log(round), for sublinear O(1/k) claims where
/// the slope reads as the power of k.
pub fn fit_loglog(trace: &Trace, metric: TraceMetric, k_window: (u64, u64)) -> Result<FitResult> {
    fit_points(trace, metric, k_window, true)
}

/// Steady-state plateau: the mean of the metric over the final 10% of
/// recorded rounds, provided the fitted log-slope over that window is flat
/// (magnitude below 1e-3 per round). Returns None while still decaying.
pub fn plateau(trace: &Trace, metric: TraceMetric) -> Option<f64> {
    let records = &trace.records;
    if records.is_empty() {
        return None;
    }
    let last_k = records.last().unwrap().k;
    let start_k = last_k - last_k / 10;
    let window: Vec<&TraceRecord> = records.iter().filter(|r| r.k >= start_k).collect();
    if window.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = window
        .iter()
        .filter(|r| metric.get(r) > 0.0)
        .map(|r| (r.k as f64, metric.get(r).ln()))
        .collect();
    if pts.len() + 1 < window.len() {
        // Metric at or below zero inside the window: treat as floored flat.
    } else {
        let fit = log_linear_fit_points(&pts);
        if fit.slope.abs() >= 1e-3 {
            return None;
        }
    }
    let mean = window.iter().map(|r| metric.get(r)).sum::<f64>() / window.len() as f64;
    Some(mean)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn synthetic_trace(f: impl Fn(u64) -> f64, ks: impl Iterator<Item = u64>) -> Trace {
        let records = ks
            .map(|k| TraceRecord {
                k,
                epoch: k as f64,
                grad_evals_per_node: k,
                comm_rounds_per_node: k,
                optimality_gap: f(k),
                mse: f(k),
                consensus_error: 0.0,
                tracking_residual: 0.0,
                test_accuracy: None,
            })
            .collect();
        Trace { records, gap_is_grad_norm: false, iterates: Vec::new() }
    }

    #[test]
    fn fit_recovers_a_pure_geometric_decay() {
        let rate: f64 = 0.9;
        let t = synthetic_trace(|k| 3.0 * rate.powi(k as i32), 0..200);
        let fit = fit_rate(&t, TraceMetric::Mse, (0, 199)).unwrap();
        assert_abs_diff_eq!(fit.slope, rate.ln(), epsilon = 1e-12);
        assert!(fit.r2 > 0.999999);
    }

    #[test]
    fn loglog_fit_recovers_one_over_k() {
        let t = synthetic_trace(|k| 5.0 / (k.max(1) as f64), (1..10_000).step_by(37));
        let fit = fit_loglog(&t, TraceMetric::Mse, (10, 10_000)).unwrap();
        assert_abs_diff_eq!(fit.slope, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn fit_ignores_the_range_after_an_exact_zero() {
        let t = synthetic_trace(|k| if k < 50 { 0.5f64.powi(k as i32) } else { 0.0 }, 0..100);
        let fit = fit_rate(&t, TraceMetric::Mse, (0, 99)).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn plateau_detected_only_once_flat() {
        let still_decaying = synthetic_trace(|k| 0.99f64.powi(k as i32), 0..100);
        assert!(plateau(&still_decaying, TraceMetric::Mse).is_none());
        let settled = synthetic_trace(|k| 1e-3 + 0.8f64.powi(k as i32), 0..500);
        let p = plateau(&settled, TraceMetric::Mse).unwrap();
        assert_abs_diff_eq!(p, 1e-3, epsilon = 1e-6);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = synthetic_trace(|k| (k as f64 + 0.1) * 1.000000000001e-7, (0..50).step_by(7));
        let csv = t.to_csv();
        let back = Trace::from_csv(&csv).unwrap();
        assert_eq!(t.records.len(), back.records.len());
        for (a, b) in t.records.iter().zip(back.records.iter()) {
            assert_eq!(a, b, "records must round-trip bit for bit");
        }
    }

    #[test]
    fn accuracy_breaks_ties_toward_positive() {
        let test = TestSet {
            features: DMatrix::from_row_slice(2, 1, &[0.0, 0.0]),
            labels: vec![1.0, -1.0],
        };
        // b = 0, c = 0 gives z = 0 for both rows; prediction is +1.
        let theta = DVector::zeros(2);
        assert_abs_diff_eq!(accuracy(&theta, &test), 0.5);
    }
}
