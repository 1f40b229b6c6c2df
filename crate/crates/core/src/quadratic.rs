//! Synthetic quadratic problem instances.
//!
//! Component functions are f_{i,j}(θ) = ½ θᵀA_{i,j}θ − c_{i,j}ᵀθ plus an
//! optional shared ridge (r/2)‖θ‖² folded into every component. Each
//! A_{i,j} must be symmetric positive semidefinite (checked on
//! construction); strong convexity of the global average is what the
//! optimizers rely on, so construction also rejects instances whose global
//! Hessian is singular after the ridge.
//!
//! Quadratics are the controllable test bed: the minimizer is a linear
//! solve, the heterogeneity across nodes and the sampling noise within a
//! node are set independently by the generator, and the condition number
//! is dialed in through the eigenvalue range.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::objective::{ComponentOracle, SmoothnessInfo};

struct NodeComponents {
    mats: Vec<DMatrix<f64>>,
    lins: Vec<DVector<f64>>,
}

pub struct QuadraticProblem {
    dim: usize,
    ridge: f64,
    nodes: Vec<NodeComponents>,
    smoothness: SmoothnessInfo,
    /// Global average Hessian without the ridge, kept for the minimizer
    /// solve.
    mean_mat: DMatrix<f64>,
    mean_lin: DVector<f64>,
}

/// Eigenvalues may round slightly negative on a PSD matrix.
const PSD_TOL: f64 = 1e-10;

/// One node's component list: aligned Hessians and linear terms.
pub type NodeParts = (Vec<DMatrix<f64>>, Vec<DVector<f64>>);

impl QuadraticProblem {
    /// Assemble from explicit per-node component lists. `nodes[i]` is the
    /// pair (Hessians, linear terms) of node i.
    pub fn from_parts(parts: Vec<NodeParts>, ridge: f64) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Invalid("quadratic problem needs at least one node".into()));
        }
        if ridge < 0.0 {
            return Err(Error::Invalid(format!("ridge must be nonnegative (got {ridge})")));
        }
        let dim = parts
            .first()
            .and_then(|(mats, _)| mats.first())
            .map(|m| m.nrows())
            .ok_or_else(|| Error::Invalid("node 0 has no components".into()))?;

        let mut component_lmax = 0.0f64;
        let mut mean_mat = DMatrix::zeros(dim, dim);
        let mut mean_lin = DVector::zeros(dim);
        let n = parts.len();
        let mut nodes = Vec::with_capacity(n);
        for (i, (mats, lins)) in parts.into_iter().enumerate() {
            if mats.is_empty() || mats.len() != lins.len() {
                return Err(Error::Invalid(format!(
                    "node {i}: {} matrices vs {} linear terms",
                    mats.len(),
                    lins.len()
                )));
            }
            let m = mats.len() as f64;
            for (j, (a, c)) in mats.iter().zip(lins.iter()).enumerate() {
                if a.nrows() != dim || a.ncols() != dim || c.len() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "node {i} component {j}: expected {dim}x{dim} matrix and {dim}-vector"
                    )));
                }
                let asym = (a - a.transpose()).norm();
                if asym > PSD_TOL {
                    return Err(Error::NotPsd {
                        node: i,
                        j,
                        detail: format!("asymmetry norm {asym}"),
                    });
                }
                let eig = SymmetricEigen::new(a.clone()).eigenvalues;
                let lmin = eig.iter().copied().fold(f64::INFINITY, f64::min);
                let lmax = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lmin < -PSD_TOL {
                    return Err(Error::NotPsd {
                        node: i,
                        j,
                        detail: format!("smallest eigenvalue {lmin}"),
                    });
                }
                component_lmax = component_lmax.max(lmax);
                mean_mat += a / (m * n as f64);
                mean_lin += c / (m * n as f64);
            }
            nodes.push(NodeComponents { mats, lins });
        }

        let mean_eig = SymmetricEigen::new(mean_mat.clone()).eigenvalues;
        let mu = mean_eig.iter().copied().fold(f64::INFINITY, f64::min) + ridge;
        let global_l = mean_eig.iter().copied().fold(f64::NEG_INFINITY, f64::max) + ridge;
        if mu <= 0.0 {
            return Err(Error::Invalid(format!(
                "global Hessian is not positive definite (mu = {mu}); add a ridge"
            )));
        }
        let smoothness = SmoothnessInfo { component_l: component_lmax + ridge, global_l, mu };
        Ok(QuadraticProblem { dim, ridge, nodes, smoothness, mean_mat, mean_lin })
    }

    /// Scalar components ½(θ − c)² from per-node center lists.
    pub fn one_dimensional(centers: &[Vec<f64>]) -> Result<Self> {
        let parts = centers
            .iter()
            .map(|cs| {
                let mats = cs.iter().map(|_| DMatrix::from_element(1, 1, 1.0)).collect();
                let lins = cs.iter().map(|&c| DVector::from_element(1, c)).collect();
                (mats, lins)
            })
            .collect();
        Self::from_parts(parts, 0.0)
    }

    /// Identity-Hessian components ½‖θ − c_{i,j}‖² from explicit centers.
    pub fn isotropic(centers: Vec<Vec<DVector<f64>>>) -> Result<Self> {
        let parts = centers
            .into_iter()
            .map(|cs| {
                let dim = cs.first().map(|c| c.len()).unwrap_or(0);
                let mats = cs.iter().map(|_| DMatrix::identity(dim, dim)).collect();
                (mats, cs)
            })
            .collect();
        Self::from_parts(parts, 0.0)
    }

    /// Seeded generator with independent control over conditioning,
    /// cross-node heterogeneity, and within-node sampling noise.
    ///
    /// Component Hessians are random rotations of eigenvalues drawn
    /// uniformly from `eig_range`. Component minimizer targets are
    /// `hetero · u_i + jitter · v_{i,j}` with u, v standard Gaussian per
    /// node and per component; c_{i,j} = A_{i,j} · target.
    #[allow(clippy::too_many_arguments)]
    pub fn random(
        n: usize,
        m: usize,
        dim: usize,
        eig_range: (f64, f64),
        hetero: f64,
        jitter: f64,
        ridge: f64,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || m == 0 || dim == 0 {
            return Err(Error::Invalid("generator needs n, m, dim all positive".into()));
        }
        let (lo, hi) = eig_range;
        if !(0.0 <= lo && lo <= hi) {
            return Err(Error::Invalid(format!("bad eigenvalue range [{lo}, {hi}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> DVector<f64> {
            DVector::from_fn(dim, |_, _| {
                let g: f64 = rng.sample(StandardNormal);
                scale * g
            })
        }
        let mut parts = Vec::with_capacity(n);
        for _ in 0..n {
            let node_center = gaussian_vec(&mut rng, dim, hetero);
            let mut mats = Vec::with_capacity(m);
            let mut lins = Vec::with_capacity(m);
            for _ in 0..m {
                let a = if dim == 1 {
                    DMatrix::from_element(1, 1, rng.random_range(lo..=hi))
                } else {
                    let gauss = {
                        let r = &mut rng;
                        DMatrix::from_fn(dim, dim, |_, _| r.sample::<f64, _>(StandardNormal))
                    };
                    let q = gauss.qr().q();
                    let eigs = {
                        let r = &mut rng;
                        DVector::from_fn(dim, |_, _| r.random_range(lo..=hi))
                    };
                    &q * DMatrix::from_diagonal(&eigs) * q.transpose()
                };
                let target = &node_center + gaussian_vec(&mut rng, dim, jitter);
                let c = &a * &target;
                mats.push(a);
                lins.push(c);
            }
            parts.push((mats, lins));
        }
        Self::from_parts(parts, ridge)
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Exact minimizer of the global average: solves
    /// (Ā + ridge·I) θ = c̄.
    pub fn minimizer(&self) -> Result<DVector<f64>> {
        let mut h = self.mean_mat.clone();
        for l in 0..self.dim {
            h[(l, l)] += self.ridge;
        }
        if let Some(chol) = h.clone().cholesky() {
            return Ok(chol.solve(&self.mean_lin));
        }
        h.lu()
            .solve(&self.mean_lin)
            .ok_or_else(|| Error::Invalid("global Hessian solve failed".into()))
    }

    // --- text fixture --------------------------------------------------------

    /// Serialize to the plain-text fixture format used by regression tests:
    /// a header, then per component a `A i j` block of dim rows and a
    /// `c i j` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "quadratic");
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "ridge {}", self.ridge);
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        let sizes: Vec<String> = self.nodes.iter().map(|nc| nc.mats.len().to_string()).collect();
        let _ = writeln!(out, "components {}", sizes.join(" "));
        for (i, nc) in self.nodes.iter().enumerate() {
            for (j, (a, c)) in nc.mats.iter().zip(nc.lins.iter()).enumerate() {
                let _ = writeln!(out, "A {i} {j}");
                for row in 0..self.dim {
                    let cells: Vec<String> =
                        (0..self.dim).map(|col| format!("{}", a[(row, col)])).collect();
                    let _ = writeln!(out, "{}", cells.join(" "));
                }
                let _ = writeln!(out, "c {i} {j}");
                let cells: Vec<String> = (0..self.dim).map(|l| format!("{}", c[l])).collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
        out
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::BadFixture { path: "<text>".into(), message: msg.into() };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next() != Some("quadratic") {
            return Err(bad("missing `quadratic` header"));
        }
        let field = |line: Option<&str>, key: &str| -> Result<String> {
            line.and_then(|l| l.strip_prefix(key))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(&format!("expected `{key}` line")))
        };
        let dim: usize =
            field(lines.next(), "dim ")?.parse().map_err(|_| bad("bad dim"))?;
        let ridge: f64 =
            field(lines.next(), "ridge ")?.parse().map_err(|_| bad("bad ridge"))?;
        let n: usize =
            field(lines.next(), "nodes ")?.parse().map_err(|_| bad("bad node count"))?;
        let sizes: Vec<usize> = field(lines.next(), "components ")?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("bad component count")))
            .collect::<Result<_>>()?;
        if sizes.len() != n {
            return Err(bad("component-count list does not match node count"));
        }
        let mut parts: Vec<NodeParts> = Vec::with_capacity(n);
        for (i, &m) in sizes.iter().enumerate() {
            let mut mats = Vec::with_capacity(m);
            let mut lins = Vec::with_capacity(m);
            for j in 0..m {
                let tag = field(lines.next(), "A ")?;
                if tag != format!("{i} {j}") {
                    return Err(bad(&format!("expected `A {i} {j}`, found `A {tag}`")));
                }
                let mut a = DMatrix::zeros(dim, dim);
                for row in 0..dim {
                    let line = lines.next().ok_or_else(|| bad("truncated matrix block"))?;
                    let cells: Vec<f64> = line
                        .split_whitespace()
                        .map(|s| s.parse().map_err(|_| bad("bad matrix entry")))
                        .collect::<Result<_>>()?;
                    if cells.len() != dim {
                        return Err(bad("matrix row has wrong width"));
                    }
                    for (col, &v) in cells.iter().enumerate() {
                        a[(row, col)] = v;
                    }
                }
                let tag = field(lines.next(), "c ")?;
                if tag != format!("{i} {j}") {
                    return Err(bad(&format!("expected `c {i} {j}`, found `c {tag}`")));
                }
                let line = lines.next().ok_or_else(|| bad("truncated linear term"))?;
                let cells: Vec<f64> = line
                    .split_whitespace()
                    .map(|s| s.parse().map_err(|_| bad("bad vector entry")))
                    .collect::<Result<_>>()?;
                if cells.len() != dim {
                    return Err(bad("linear term has wrong width"));
                }
                mats.push(a);
                lins.push(DVector::from_vec(cells));
            }
            parts.push((mats, lins));
        }
        if lines.next().is_some() {
            return Err(bad("trailing content after the last component"));
        }
        Self::from_parts(parts, ridge)
    }

    pub fn read_text(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::BadFixture { message, .. } => {
                Error::BadFixture { path: path.display().to_string(), message }
            }
            other => other,
        })
    }
}

impl ComponentOracle for QuadraticProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn components(&self, node: usize) -> usize {
        self.nodes[node].mats.len()
    }

    fn component_value(&self, theta: &DVector<f64>, node: usize, j: usize) -> f64 {
        let nc = &self.nodes[node];
        let a = &nc.mats[j];
        let c = &nc.lins[j];
        0.5 * theta.dot(&(a * theta)) - c.dot(theta) + 0.5 * self.ridge * theta.norm_squared()
    }

    fn component_gradient_into(&self, theta: &DVector<f64>, node: usize, j: usize, out: &mut DVector<f64>) {
        let nc = &self.nodes[node];
        out.gemv(1.0, &nc.mats[j], theta, 0.0);
        *out -= &nc.lins[j];
        out.axpy(self.ridge, theta, 1.0);
    }

    fn smoothness(&self) -> SmoothnessInfo {
        self.smoothness
    }
}

// ---------------------------------------------------------------------------
