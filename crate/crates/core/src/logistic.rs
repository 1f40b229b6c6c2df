//! Regularized binary logistic regression over a partitioned dataset.
//!
//! θ packs [b; c] with p = d + 1. Each component is
//!
//!   f_{i,j}(θ) = ln(1 + exp(−y_{i,j}(bᵀx_{i,j} + c))) + (λ/2)‖b‖²
//!
//! with the ridge folded into every component so each f_{i,j} is λ-strongly
//! convex in b; the bias c is never regularized. Reported constants:
//! worst-component L = max_j ¼‖[x_j;1]‖² + λ, global L from the averaged
//! second-moment bound ¼·λmax(M) + λ, and μ = λ.
//!
//! There is no closed-form minimizer; [`LogisticProblem::reference_minimizer`]
//! runs an accelerated batch descent with gradient restarts until the
//! gradient-norm certificate holds, and that point stands in for θ*.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, Partition};
use crate::error::{Error, Result};
use crate::objective::{ComponentOracle, GlmOracle, LMode, SmoothnessInfo};

struct NodeBatch {
    /// Features transposed: sample j is the contiguous column `xt.column(j)`.
    xt: DMatrix<f64>,
    y: Vec<f64>,
}

pub struct LogisticProblem {
    nodes: Vec<NodeBatch>,
    lambda: f64,
    /// Feature dimension d; the parameter dimension is d + 1.
    d: usize,
    component_l: f64,
    global_l: OnceLock<f64>,
}

/// Numerically stable ln(1 + e^t).
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Numerically stable logistic function 1/(1 + e^{−u}).
fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl LogisticProblem {
    /// Build from a dataset with ±1 labels and a node partition over its
    /// sample indices.
    pub fn new(dataset: &Dataset, part: &Partition, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::Invalid(format!(
                "regularization weight must be positive (got {lambda})"
            )));
        }
        if part.total() != dataset.len() {
            return Err(Error::Invalid(format!(
                "partition covers {} samples, dataset holds {}",
                part.total(),
                dataset.len()
            )));
        }
        let d = dataset.dim();
        let mut component_l = 0.0f64;
        let mut nodes = Vec::with_capacity(part.num_nodes());
        for i in 0..part.num_nodes() {
            let batch = part.node(i);
            let mut xt = DMatrix::zeros(d, batch.len());
            let mut y = Vec::with_capacity(batch.len());
            for (j, &g) in batch.iter().enumerate() {
                if g >= dataset.len() {
                    return Err(Error::Invalid(format!(
                        "partition references sample {g}, dataset holds {}",
                        dataset.len()
                    )));
                }
                let label = dataset.labels[g];
                if label != 1 && label != -1 {
                    return Err(Error::Invalid(format!(
                        "sample {g} has label {label}; binarize to ±1 first"
                    )));
                }
                let mut sq = 0.0;
                for l in 0..d {
                    let v = dataset.features[(g, l)];
                    xt[(l, j)] = v;
                    sq += v * v;
                }
                component_l = component_l.max(0.25 * (sq + 1.0));
                y.push(label as f64);
            }
            nodes.push(NodeBatch { xt, y });
        }
        Ok(LogisticProblem {
            nodes,
            lambda,
            d,
            component_l: component_l + lambda,
            global_l: OnceLock::new(),
        })
    }

    /// The whole dataset on one node.
    pub fn single_node(dataset: &Dataset, lambda: f64) -> Result<Self> {
        Self::new(dataset, &Partition::trivial(dataset.len()), lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Margin z = bᵀx + c for one component.
    fn margin(&self, theta: &DVector<f64>, node: usize, j: usize) -> f64 {
        let nc = &self.nodes[node];
        nc.xt.column(j).dot(&theta.rows(0, self.d)) + theta[self.d]
    }

    /// ¼·λmax of the weighted second moment of [x;1], plus λ: the tight
    /// curvature bound for F (attained at θ = 0 up to the unregularized
    /// bias). λmax comes from power iteration on the implicit operator,
    /// avoiding the p×p moment matrix.
    fn global_smoothness(&self) -> f64 {
        let p = self.d + 1;
        let n = self.nodes.len();
        let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
        let mut next = DVector::zeros(p);
        let mut lam_prev = 0.0f64;
        for _ in 0..500 {
            next.fill(0.0);
            for nc in &self.nodes {
                let w = 1.0 / (n as f64 * nc.y.len() as f64);
                for j in 0..nc.y.len() {
                    let col = nc.xt.column(j);
                    let a = w * (col.dot(&v.rows(0, self.d)) + v[self.d]);
                    next.rows_mut(0, self.d).axpy(a, &col, 1.0);
                    next[self.d] += a;
                }
            }
            let lam = next.norm();
            if lam == 0.0 {
                break;
            }
            next /= lam;
            std::mem::swap(&mut v, &mut next);
            if (lam - lam_prev).abs() <= 1e-12 * lam.max(1.0) {
                lam_prev = lam;
                break;
            }
            lam_prev = lam;
        }
        0.25 * lam_prev + self.lambda
    }

    /// High-precision batch solve defining θ* for metrics: accelerated
    /// gradient descent with gradient restarts, run until
    /// ‖∇F(θ)‖ ≤ tol at the returned point.
    pub fn reference_minimizer(&self, tol: f64, max_iters: u64) -> Result<DVector<f64>> {
        let p = self.d + 1;
        let s = self.smoothness();
        let l = s.l(LMode::Global);
        let q = (s.mu / l).sqrt();
        let beta = (1.0 - q) / (1.0 + q);
        let mut theta = DVector::zeros(p);
        let mut y: DVector<f64> = DVector::zeros(p);
        let mut grad = DVector::zeros(p);
        let mut reached = f64::INFINITY;
        for _ in 0..max_iters {
            self.global_gradient_into(&y, &mut grad);
            let gnorm = grad.norm();
            reached = reached.min(gnorm);
            if gnorm <= tol {
                return Ok(y);
            }
            let prev = theta.clone();
            theta = &y - &grad / l;
            let step = &theta - &prev;
            if grad.dot(&step) > 0.0 {
                y = theta.clone();
            } else {
                y = &theta + beta * step;
            }
        }
        Err(Error::ReferenceSolveFailed { tol, iters: max_iters, reached })
    }
}

impl ComponentOracle for LogisticProblem {
    fn dim(&self) -> usize {
        self.d + 1
    }

    fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn components(&self, node: usize) -> usize {
        self.nodes[node].y.len()
    }

    fn component_value(&self, theta: &DVector<f64>, node: usize, j: usize) -> f64 {
        let y = self.nodes[node].y[j];
        let z = self.margin(theta, node, j);
        softplus(-y * z) + 0.5 * self.lambda * theta.rows(0, self.d).norm_squared()
    }

    fn component_gradient_into(&self, theta: &DVector<f64>, node: usize, j: usize, out: &mut DVector<f64>) {
        let s = self.glm_scalar(theta, node, j);
        out.fill(0.0);
        self.glm_feature_axpy(node, j, s, out);
        out.rows_mut(0, self.d).axpy(self.lambda, &theta.rows(0, self.d), 1.0);
    }

    fn smoothness(&self) -> SmoothnessInfo {
        SmoothnessInfo {
            component_l: self.component_l,
            global_l: *self.global_l.get_or_init(|| self.global_smoothness()),
            mu: self.lambda,
        }
    }
}

impl GlmOracle for LogisticProblem {
    fn glm_scalar(&self, theta: &DVector<f64>, node: usize, j: usize) -> f64 {
        let y = self.nodes[node].y[j];
        let z = self.margin(theta, node, j);
        -y * sigmoid(-y * z)
    }

    fn glm_feature_axpy(&self, node: usize, j: usize, a: f64, out: &mut DVector<f64>) {
        out.rows_mut(0, self.d).axpy(a, &self.nodes[node].xt.column(j), 1.0);
        out[self.d] += a;
    }

    fn glm_shared_gradient_into(&self, theta: &DVector<f64>, out: &mut DVector<f64>) {
        out.fill(0.0);
        out.rows_mut(0, self.d).axpy(self.lambda, &theta.rows(0, self.d), 1.0);
    }
}

// ---------------------------------------------------------------------------
