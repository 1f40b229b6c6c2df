//! Variance-reduction building blocks shared by the centralized baselines
//! and the gradient-tracking optimizers.
//!
//! Both runner families drive the exact same table and estimator code, in
//! the same arithmetic order, so a single-node decentralized run and its
//! centralized counterpart produce matching trajectories given the same
//! RNG stream. Anything that would fork the floating-point sequence
//! between the two belongs here, not in the runners.

use nalgebra::DVector;

use crate::error::Error;
use crate::objective::{ComponentOracle, GlmOracle};

/// How a double-loop method turns T inner iterates into the next outer
/// iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvrgOption {
    /// θ_{k+1} = θ_T.
    #[default]
    LastIterate,
    /// θ_{k+1} = (1/T) Σ_{t=0}^{T−1} θ_t.
    InnerAverage,
    /// θ_{k+1} = θ_τ for one shared uniform τ ∈ {0..T−1}.
    RandomInner,
}

impl std::fmt::Display for SvrgOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SvrgOption::LastIterate => write!(f, "last"),
            SvrgOption::InnerAverage => write!(f, "average"),
            SvrgOption::RandomInner => write!(f, "random"),
        }
    }
}

impl std::str::FromStr for SvrgOption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "a" | "last" => Ok(SvrgOption::LastIterate),
            "b" | "average" => Ok(SvrgOption::InnerAverage),
            "c" | "random" => Ok(SvrgOption::RandomInner),
            other => Err(Error::Invalid(format!(
                "unknown outer option `{other}` (expected a|b|c or last|average|random)"
            ))),
        }
    }
}

/// Replacements between exact recomputations of a table's running sum.
/// Incremental updates drift by one rounding per replacement; resyncing on
/// this cadence keeps the running average within 1e-10 of the true mean
/// over arbitrarily long runs.
const RESYNC_EVERY: u64 = 1024;

/// One node's stored component gradients with an incrementally maintained
/// sum. The stored entry for component j is the gradient that was fresh
/// the last time j was sampled (initially ∇f_{i,j}(θ_0)).
#[derive(Debug, Clone)]
pub struct SagaTable {
    entries: Vec<DVector<f64>>,
    sum: DVector<f64>,
    replacements: u64,
}

impl SagaTable {
    pub fn new<O: ComponentOracle + ?Sized>(oracle: &O, node: usize, theta0: &DVector<f64>) -> Self {
        let m = oracle.components(node);
        let p = oracle.dim();
        let mut entries = Vec::with_capacity(m);
        let mut sum = DVector::zeros(p);
        for j in 0..m {
            let g = oracle.component_gradient(theta0, node, j);
            sum += &g;
            entries.push(g);
        }
        SagaTable { entries, sum, replacements: 0 }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Running average of the stored entries.
    pub fn mean_into(&self, out: &mut DVector<f64>) {
        out.copy_from(&self.sum);
        *out /= self.entries.len() as f64;
    }

    /// SAGA estimator for a sampled index with its fresh gradient already
    /// evaluated: out = fresh − entries[j] + mean. The fresh gradient then
    /// replaces entries[j].
    pub fn estimator_and_replace(&mut self, j: usize, fresh: &DVector<f64>, out: &mut DVector<f64>) {
        let m = self.entries.len() as f64;
        out.copy_from(fresh);
        *out -= &self.entries[j];
        out.axpy(1.0 / m, &self.sum, 1.0);
        self.sum += fresh;
        self.sum -= &self.entries[j];
        self.entries[j].copy_from(fresh);
        self.replacements += 1;
        if self.replacements.is_multiple_of(RESYNC_EVERY) {
            self.resync();
        }
    }

    fn resync(&mut self) {
        self.sum.fill(0.0);
        for e in &self.entries {
            self.sum += e;
        }
    }

    /// Exact mean recomputed from the entries, for drift checks.
    pub fn exact_mean(&self) -> DVector<f64> {
        let mut s = DVector::zeros(self.sum.len());
        for e in &self.entries {
            s += e;
        }
        s / self.entries.len() as f64
    }
}

/// Scalar-per-component table for GLM-shaped objectives. Stores the
/// loss-gradient scalar s_j and the running sum of s_j·φ_j; the shared
/// regularizer gradient is applied exactly at the current iterate, so the
/// estimator differs from the full table's (both are unbiased, but the
/// regularizer term here never lags).
pub struct CompactSagaTable {
    scalars: Vec<f64>,
    sum: DVector<f64>,
    replacements: u64,
}

impl CompactSagaTable {
    pub fn new<O: GlmOracle + ?Sized>(oracle: &O, node: usize, theta0: &DVector<f64>) -> Self {
        let m = oracle.components(node);
        let mut scalars = Vec::with_capacity(m);
        let mut sum = DVector::zeros(oracle.dim());
        for j in 0..m {
            let s = oracle.glm_scalar(theta0, node, j);
            oracle.glm_feature_axpy(node, j, s, &mut sum);
            scalars.push(s);
        }
        CompactSagaTable { scalars, sum, replacements: 0 }
    }

    pub fn len(&self) -> usize {
        self.scalars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scalars.is_empty()
    }

    /// Average stored loss gradient plus the exact shared term at θ:
    /// (1/m)Σ_j s_j·φ_j + ∇r(θ).
    pub fn mean_into<O: GlmOracle + ?Sized>(
        &self,
        oracle: &O,
        theta: &DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        oracle.glm_shared_gradient_into(theta, out);
        out.axpy(1.0 / self.scalars.len() as f64, &self.sum, 1.0);
    }

    /// Estimator for sampled index j with its fresh scalar already
    /// evaluated: out = (s − s_j)·φ_j + (1/m)Σ s·φ + ∇r(θ). The fresh
    /// scalar then replaces s_j.
    pub fn estimator_and_replace<O: GlmOracle + ?Sized>(
        &mut self,
        oracle: &O,
        node: usize,
        j: usize,
        fresh: f64,
        theta: &DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        oracle.glm_shared_gradient_into(theta, out);
        out.axpy(1.0 / self.scalars.len() as f64, &self.sum, 1.0);
        let delta = fresh - self.scalars[j];
        oracle.glm_feature_axpy(node, j, delta, out);
        oracle.glm_feature_axpy(node, j, delta, &mut self.sum);
        self.scalars[j] = fresh;
        self.replacements += 1;
        if self.replacements.is_multiple_of(RESYNC_EVERY) {
            self.resync(oracle, node);
        }
    }

    fn resync<O: GlmOracle + ?Sized>(&mut self, oracle: &O, node: usize) {
        self.sum.fill(0.0);
        for (j, &s) in self.scalars.iter().enumerate() {
            oracle.glm_feature_axpy(node, j, s, &mut self.sum);
        }
    }
}

/// Uniform interface over the two table layouts, so the SAGA-style runner
/// loops are written once. `step` performs the one charged gradient
/// evaluation at θ, forms the estimator, and replaces the table entry.
pub(crate) trait GradientTable<O: ?Sized> {
    fn init(oracle: &O, node: usize, theta0: &DVector<f64>) -> Self;

    /// Current running mean, with any exact shared term evaluated at θ.
    fn mean_now(&self, oracle: &O, node: usize, theta: &DVector<f64>, out: &mut DVector<f64>);

    fn step(
        &mut self,
        oracle: &O,
        node: usize,
        j: usize,
        theta: &DVector<f64>,
        out: &mut DVector<f64>,
    );
}

impl<O: ComponentOracle + ?Sized> GradientTable<O> for SagaTable {
    fn init(oracle: &O, node: usize, theta0: &DVector<f64>) -> Self {
        SagaTable::new(oracle, node, theta0)
    }

    fn mean_now(&self, _oracle: &O, _node: usize, _theta: &DVector<f64>, out: &mut DVector<f64>) {
        self.mean_into(out)
    }

    fn step(
        &mut self,
        oracle: &O,
        node: usize,
        j: usize,
        theta: &DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        let fresh = oracle.component_gradient(theta, node, j);
        self.estimator_and_replace(j, &fresh, out);
    }
}

impl<O: GlmOracle + ?Sized> GradientTable<O> for CompactSagaTable {
    fn init(oracle: &O, node: usize, theta0: &DVector<f64>) -> Self {
        CompactSagaTable::new(oracle, node, theta0)
    }

    fn mean_now(&self, oracle: &O, _node: usize, theta: &DVector<f64>, out: &mut DVector<f64>) {
        self.mean_into(oracle, theta, out)
    }

    fn step(
        &mut self,
        oracle: &O,
        node: usize,
        j: usize,
        theta: &DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        let fresh = oracle.glm_scalar(theta, node, j);
        self.estimator_and_replace(oracle, node, j, fresh, theta, out);
    }
}

/// SVRG estimator with the anchor terms already available:
/// out = ∇f_{i,j}(θ) − ∇f_{i,j}(anchor) + batch_anchor. `scratch` holds
/// the anchor-point component gradient afterwards. Costs the two fresh
/// component evaluations the counters charge per inner step.
#[allow(clippy::too_many_arguments)]
pub fn svrg_estimator_into<O: ComponentOracle + ?Sized>(
    oracle: &O,
    node: usize,
    j: usize,
    theta: &DVector<f64>,
    anchor: &DVector<f64>,
    batch_anchor: &DVector<f64>,
    scratch: &mut DVector<f64>,
    out: &mut DVector<f64>,
) {
    oracle.component_gradient_into(theta, node, j, out);
    oracle.component_gradient_into(anchor, node, j, scratch);
    *out -= &*scratch;
    *out += batch_anchor;
}

/// Running average of inner iterates for the inner-average outer option.
pub struct InnerAverager {
    sum: DVector<f64>,
    count: u64,
}

impl InnerAverager {
    pub fn new(p: usize) -> Self {
        InnerAverager { sum: DVector::zeros(p), count: 0 }
    }

    pub fn push(&mut self, theta: &DVector<f64>) {
        self.sum += theta;
        self.count += 1;
    }

    pub fn mean_into(&self, out: &mut DVector<f64>) {
        out.copy_from(&self.sum);
        *out /= self.count as f64;
    }

    pub fn reset(&mut self) {
        self.sum.fill(0.0);
        self.count = 0;
    }
}

// ---------------------------------------------------------------------------
