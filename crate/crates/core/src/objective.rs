//! Finite-sum objectives distributed over nodes.
//!
//! The global objective is F(θ) = (1/n) Σ_i f_i(θ) with local averages
//! f_i(θ) = (1/m_i) Σ_j f_{i,j}(θ). Everything an optimizer needs is the
//! ability to evaluate one component f_{i,j} and its gradient; batch and
//! global quantities are exact averages provided on top of that.
//!
//! Implementors guarantee each component is L-smooth and the global F is
//! μ-strongly convex, reporting both through [`SmoothnessInfo`]. Two L
//! values are carried: the worst single component's constant (what the
//! stochastic step-size rules want) and the global Hessian bound (tighter,
//! useful for batch reference solves). Callers choose via [`LMode`];
//! step-size presets default to the worst-component value.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Smoothness and strong-convexity constants of a problem instance.
#[derive(Debug, Clone, Copy)]
pub struct SmoothnessInfo {
    /// Largest smoothness constant over all components f_{i,j}.
    pub component_l: f64,
    /// Smoothness constant of the global average F.
    pub global_l: f64,
    /// Strong-convexity modulus of F.
    pub mu: f64,
}

/// Which smoothness constant a step-size rule should read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LMode {
    #[default]
    WorstComponent,
    Global,
}

impl SmoothnessInfo {
    pub fn l(&self, mode: LMode) -> f64 {
        match mode {
            LMode::WorstComponent => self.component_l,
            LMode::Global => self.global_l,
        }
    }

    pub fn kappa(&self, mode: LMode) -> f64 {
        self.l(mode) / self.mu
    }
}

/// Oracle access to one component function at a time.
///
/// `node` indexes 0..n, `j` indexes 0..m_i within that node. Out-of-range
/// indices are a caller bug and panic via debug assertions on the hot
/// paths; the checked entry points below are for external callers.
pub trait ComponentOracle: Send + Sync {
    /// Parameter dimension p.
    fn dim(&self) -> usize;

    /// Number of nodes n.
    fn num_nodes(&self) -> usize;

    /// Number of local components m_i.
    fn components(&self, node: usize) -> usize;

    /// f_{node,j}(θ).
    fn component_value(&self, theta: &DVector<f64>, node: usize, j: usize) -> f64;

    /// ∇f_{node,j}(θ), written into `out`.
    fn component_gradient_into(&self, theta: &DVector<f64>, node: usize, j: usize, out: &mut DVector<f64>);

    fn smoothness(&self) -> SmoothnessInfo;

    // --- provided -----------------------------------------------------------

    /// Total component count N = Σ_i m_i.
    fn total_components(&self) -> usize {
        (0..self.num_nodes()).map(|i| self.components(i)).sum()
    }

    fn component_gradient(&self, theta: &DVector<f64>, node: usize, j: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.component_gradient_into(theta, node, j, &mut out);
        out
    }

    /// Local batch value f_i(θ), the exact average over the node's
    /// components.
    fn local_value(&self, theta: &DVector<f64>, node: usize) -> f64 {
        let m = self.components(node);
        let sum: f64 = (0..m).map(|j| self.component_value(theta, node, j)).sum();
        sum / m as f64
    }

    /// Local batch gradient ∇f_i(θ) into `out`.
    fn local_gradient_into(&self, theta: &DVector<f64>, node: usize, out: &mut DVector<f64>) {
        let m = self.components(node);
        out.fill(0.0);
        let mut scratch = DVector::zeros(self.dim());
        for j in 0..m {
            self.component_gradient_into(theta, node, j, &mut scratch);
            *out += &scratch;
        }
        *out /= m as f64;
    }

    fn local_gradient(&self, theta: &DVector<f64>, node: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.local_gradient_into(theta, node, &mut out);
        out
    }

    /// Global value F(θ) = (1/n) Σ_i f_i(θ).
    fn global_value(&self, theta: &DVector<f64>) -> f64 {
        let n = self.num_nodes();
        let sum: f64 = (0..n).map(|i| self.local_value(theta, i)).sum();
        sum / n as f64
    }

    /// Global gradient ∇F(θ) into `out`.
    fn global_gradient_into(&self, theta: &DVector<f64>, out: &mut DVector<f64>) {
        let n = self.num_nodes();
        out.fill(0.0);
        let mut local = DVector::zeros(self.dim());
        for i in 0..n {
            self.local_gradient_into(theta, i, &mut local);
            *out += &local;
        }
        *out /= n as f64;
    }

    fn global_gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.global_gradient_into(theta, &mut out);
        out
    }
}

/// Components of generalized-linear shape: the loss part of every gradient
/// is a scalar multiple of a fixed per-component feature vector φ_{i,j},
/// plus the gradient of a shared smooth term r,
///
///   ∇f_{i,j}(θ) = s_{i,j}(θ)·φ_{i,j} + ∇r(θ).
///
/// Gradient tables over such components can store one scalar per component
/// instead of a full vector; see the compact table in the
/// variance-reduction module.
pub trait GlmOracle: ComponentOracle {
    /// The loss-gradient scalar s_{i,j}(θ).
    fn glm_scalar(&self, theta: &DVector<f64>, node: usize, j: usize) -> f64;

    /// out += a · φ_{i,j}.
    fn glm_feature_axpy(&self, node: usize, j: usize, a: f64, out: &mut DVector<f64>);

    /// ∇r(θ), written into `out`.
    fn glm_shared_gradient_into(&self, theta: &DVector<f64>, out: &mut DVector<f64>);
}

/// Bounds-checked component evaluation for external callers.
pub fn checked_component_gradient(
    oracle: &dyn ComponentOracle,
    theta: &DVector<f64>,
    node: usize,
    j: usize,
) -> Result<DVector<f64>> {
    if node >= oracle.num_nodes() {
        return Err(Error::NodeOutOfRange { node, n: oracle.num_nodes() });
    }
    let m = oracle.components(node);
    if j >= m {
        return Err(Error::ComponentOutOfRange { node, m, j });
    }
    if theta.len() != oracle.dim() {
        return Err(Error::DimensionMismatch(format!(
            "theta has dimension {}, oracle expects {}",
            theta.len(),
            oracle.dim()
        )));
    }
    Ok(oracle.component_gradient(theta, node, j))
}

/// Average squared norm of the local batch gradients at a point:
/// (1/n) Σ_i ‖∇f_i(θ)‖². Evaluated at the minimizer this measures how far
/// apart the nodes' local problems pull, the bias source for
/// non-tracking decentralized methods.
pub fn heterogeneity(oracle: &dyn ComponentOracle, theta: &DVector<f64>) -> f64 {
    let n = oracle.num_nodes();
    let mut g = DVector::zeros(oracle.dim());
    let mut acc = 0.0;
    for i in 0..n {
        oracle.local_gradient_into(theta, i, &mut g);
        acc += g.norm_squared();
    }
    acc / n as f64
}

/// View a balanced multi-node problem as a single pooled node whose
/// components are everyone's components. Only valid when all nodes hold
/// the same m, otherwise pooling would reweight the objective.
pub struct PooledOracle<'a> {
    inner: &'a dyn ComponentOracle,
    per_node: usize,
}

impl<'a> PooledOracle<'a> {
    pub fn new(inner: &'a dyn ComponentOracle) -> Result<Self> {
        let n = inner.num_nodes();
        let per_node = inner.components(0);
        for i in 1..n {
            if inner.components(i) != per_node {
                return Err(Error::Invalid(format!(
                    "cannot pool an unbalanced problem: node 0 holds {per_node} components, node {i} holds {}",
                    inner.components(i)
                )));
            }
        }
        Ok(PooledOracle { inner, per_node })
    }

    fn split(&self, j: usize) -> (usize, usize) {
        (j / self.per_node, j % self.per_node)
    }
}

impl ComponentOracle for PooledOracle<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn num_nodes(&self) -> usize {
        1
    }

    fn components(&self, _node: usize) -> usize {
        self.inner.num_nodes() * self.per_node
    }

    fn component_value(&self, theta: &DVector<f64>, _node: usize, j: usize) -> f64 {
        let (i, jj) = self.split(j);
        self.inner.component_value(theta, i, jj)
    }

    fn component_gradient_into(&self, theta: &DVector<f64>, _node: usize, j: usize, out: &mut DVector<f64>) {
        let (i, jj) = self.split(j);
        self.inner.component_gradient_into(theta, i, jj, out)
    }

    fn smoothness(&self) -> SmoothnessInfo {
        self.inner.smoothness()
    }
}

/// Central finite-difference gradient of an arbitrary scalar function,
/// the independent oracle used to check analytic gradients in tests.
pub fn central_difference_gradient(
    f: impl Fn(&DVector<f64>) -> f64,
    theta: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    let p = theta.len();
    let mut g = DVector::zeros(p);
    let mut probe = theta.clone();
    for l in 0..p {
        let base = theta[l];
        probe[l] = base + h;
        let up = f(&probe);
        probe[l] = base - h;
        let down = f(&probe);
        probe[l] = base;
        g[l] = (up - down) / (2.0 * h);
    }
    g
}
