//! Doubly-stochastic mixing matrices over a topology.
//!
//! The consensus primitive is a symmetric matrix W with rows summing to one,
//! nonnegative entries, and w_ir > 0 exactly when (i, r) is an edge or
//! i = r. Two standard constructions are provided:
//!
//! * `metropolis`: w_ir = 1 / (1 + max(deg_i, deg_r)) on edges, diagonal
//!   takes the slack. Always satisfies the contract on a connected graph.
//! * `lazy_metropolis`: (I + W)/2 with W as above. Shifts the spectrum into
//!   [0, 1], halving the worst-case mixing rate but guaranteeing positive
//!   semidefiniteness. On the 16-node exponential graph this variant has
//!   second eigenvalue exactly 0.75 where the plain rule gives 0.50.
//!
//! [`spectral_gap`] reports λ, the spectral radius of W − (1/n)·11ᵀ, which
//! governs the linear rate of average consensus: disagreement contracts by
//! a factor λ per round. λ < 1 iff the matrix mixes; a disconnected or
//! otherwise non-primitive input is rejected.
//!
//! Internally rows are stored sparsely as sorted (neighbor, weight) pairs,
//! diagonal included, so a mixing step costs O(degree · p) per node and
//! sums in a fixed order.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{GraphKind, Topology};

/// How to turn a topology into mixing weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightRule {
    Metropolis,
    LazyMetropolis,
}

impl std::fmt::Display for WeightRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightRule::Metropolis => "metropolis",
            WeightRule::LazyMetropolis => "lazy_metropolis",
        })
    }
}

impl FromStr for WeightRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metropolis" => Ok(WeightRule::Metropolis),
            "lazy_metropolis" => Ok(WeightRule::LazyMetropolis),
            other => Err(Error::Invalid(format!(
                "unknown weight rule `{other}` (expected metropolis or lazy_metropolis)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightMatrix {
    n: usize,
    /// Row i holds sorted (column, weight) pairs, including the diagonal.
    rows: Vec<Vec<(usize, f64)>>,
}

/// Tolerance for the structural checks on W.
pub const WEIGHT_TOL: f64 = 1e-12;

impl WeightMatrix {
    /// Metropolis rule on a connected topology.
    pub fn metropolis(topo: &Topology) -> Result<Self> {
        Self::assemble(topo, |w| w, |sum| 1.0 - sum)
    }

    /// Lazy variant (I + W)/2 of the Metropolis rule.
    pub fn lazy_metropolis(topo: &Topology) -> Result<Self> {
        Self::assemble(topo, |w| 0.5 * w, |sum| 1.0 - sum)
    }

    pub fn build(topo: &Topology, rule: WeightRule) -> Result<Self> {
        match rule {
            WeightRule::Metropolis => Self::metropolis(topo),
            WeightRule::LazyMetropolis => Self::lazy_metropolis(topo),
        }
    }

    fn assemble(
        topo: &Topology,
        edge_weight: impl Fn(f64) -> f64,
        diagonal: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let n = topo.n();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let di = topo.degree(i) as f64;
            let mut row = Vec::with_capacity(topo.degree(i) + 1);
            let mut off_sum = 0.0;
            for &r in topo.neighbors(i) {
                let dr = topo.degree(r) as f64;
                let w = edge_weight(1.0 / (1.0 + di.max(dr)));
                off_sum += w;
                row.push((r, w));
            }
            let wii = diagonal(off_sum);
            row.push((i, wii));
            row.sort_unstable_by_key(|&(c, _)| c);
            rows.push(row);
        }
        let w = WeightMatrix { n, rows };
        w.validate(Some(topo))?;
        Ok(w)
    }

    /// Accept an externally supplied dense matrix, subject to the same
    /// structural checks (pattern check skipped without a topology).
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::BadWeights(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::new();
            for r in 0..n {
                let w = m[(i, r)];
                if w != 0.0 || r == i {
                    row.push((r, w));
                }
            }
            rows.push(row);
        }
        let w = WeightMatrix { n, rows };
        w.validate(None)?;
        Ok(w)
    }

    /// Structural contract: symmetry, unit row sums, nonnegativity, all to
    /// 1e-12, and (given a topology) support exactly on edges plus the
    /// diagonal.
    pub fn validate(&self, topo: Option<&Topology>) -> Result<()> {
        for i in 0..self.n {
            let mut sum = 0.0;
            for &(r, w) in &self.rows[i] {
                if w < -WEIGHT_TOL {
                    return Err(Error::BadWeights(format!("negative entry w[{i}][{r}] = {w}")));
                }
                let back = self.entry(r, i);
                if (back - w).abs() > WEIGHT_TOL {
                    return Err(Error::BadWeights(format!(
                        "asymmetric pair w[{i}][{r}] = {w} vs w[{r}][{i}] = {back}"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::BadWeights(format!("row {i} sums to {sum}")));
            }
            if let Some(t) = topo {
                for &(r, w) in &self.rows[i] {
                    let on_support = r == i || t.is_edge(i, r);
                    if !on_support && w != 0.0 {
                        return Err(Error::BadWeights(format!(
                            "nonzero weight w[{i}][{r}] = {w} off the edge set"
                        )));
                    }
                    if on_support && w <= 0.0 {
                        return Err(Error::BadWeights(format!(
                            "non-positive weight w[{i}][{r}] = {w} on the support"
                        )));
                    }
                }
                if self.rows[i].len() != t.degree(i) + 1 {
                    return Err(Error::BadWeights(format!(
                        "row {i} has {} entries, expected degree + 1 = {}",
                        self.rows[i].len(),
                        t.degree(i) + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, r: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&r, |&(c, _)| c)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Sorted (column, weight) pairs of row i, diagonal included.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for &(r, w) in &self.rows[i] {
                m[(i, r)] = w;
            }
        }
        m
    }

    /// Write the `n`/`kind` header followed by one `i r w_ir` triple per
    /// stored entry (diagonal included), ascending by row then column.
    pub fn to_text(&self, kind: GraphKind) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "kind {kind}");
        for i in 0..self.n {
            for &(r, w) in &self.rows[i] {
                let _ = writeln!(out, "{i} {r} {w}");
            }
        }
        out
    }

    pub fn write_text(&self, kind: GraphKind, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text(kind)).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Parse the text format back. Returns the matrix and the recorded kind;
    /// the result passes the same structural validation as a built matrix.
    pub fn from_text(text: &str) -> Result<(Self, GraphKind)> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: String| Error::BadWeights(format!("line {}: {msg}", line + 1));
        let (ln, first) = lines.next().ok_or_else(|| Error::BadWeights("empty file".into()))?;
        let n: usize = first
            .strip_prefix("n ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(ln, "expected `n <count>` header".into()))?;
        let (ln, second) =
            lines.next().ok_or_else(|| Error::BadWeights("missing kind header".into()))?;
        let kind: GraphKind = second
            .strip_prefix("kind ")
            .ok_or_else(|| bad(ln, "expected `kind <kind>` header".into()))?
            .trim()
            .parse()?;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (ln, line) in lines {
            let mut parts = line.split_whitespace();
            let mut next = |what: &str| {
                parts.next().ok_or_else(|| bad(ln, format!("missing {what}")))
            };
            let i: usize = next("row index")?
                .parse()
                .map_err(|_| bad(ln, "bad row index".into()))?;
            let r: usize = next("column index")?
                .parse()
                .map_err(|_| bad(ln, "bad column index".into()))?;
            let w: f64 = next("weight")?
                .parse()
                .map_err(|_| bad(ln, "bad weight".into()))?;
            if i >= n || r >= n {
                return Err(bad(ln, format!("index ({i}, {r}) out of range for n = {n}")));
            }
            rows[i].push((r, w));
        }
        for (i, row) in rows.iter_mut().enumerate() {
            if !row.iter().any(|&(c, _)| c == i) {
                row.push((i, 0.0));
            }
            row.sort_unstable_by_key(|&(c, _)| c);
        }
        let w = WeightMatrix { n, rows };
        w.validate(None)?;
        Ok((w, kind))
    }
}

// ---------------------------------------------------------------------------

/// λ and the full spectrum it was read off from.
#[derive(Debug, Clone)]
pub struct SpectralInfo {
    /// Spectral radius of W − (1/n)·11ᵀ; the per-round consensus
    /// contraction factor.
    pub lambda: f64,
    /// Eigenvalues of W itself, descending.
    pub eigenvalues: Vec<f64>,
}

/// Compute λ by dense symmetric eigendecomposition of W − (1/n)·11ᵀ.
///
/// Errors with [`Error::NonMixing`] when λ ≥ 1 − 1e-12, which happens
/// exactly when the support is disconnected or the chain is periodic.
pub fn spectral_gap(w: &WeightMatrix) -> Result<SpectralInfo> {
    let n = w.n();
    let mut b = w.to_dense();
    let shift = 1.0 / n as f64;
    for i in 0..n {
        for r in 0..n {
            b[(i, r)] -= shift;
        }
    }
    let deflated = SymmetricEigen::new(b);
    let lambda = deflated.eigenvalues.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()));
    let full = SymmetricEigen::new(w.to_dense());
    let mut eigenvalues: Vec<f64> = full.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if lambda >= 1.0 - WEIGHT_TOL {
        return Err(Error::NonMixing { lambda });
    }
    Ok(SpectralInfo { lambda, eigenvalues })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Hand-computed Metropolis weights, small enough to check entry by entry.

    #[test]
    fn two_node_path_mixes_in_one_step() {
        let t = Topology::complete(2).unwrap();
        let w = WeightMatrix::metropolis(&t).unwrap();
        // Both degrees 1: off-diagonal 1/2, diagonal 1/2.
        for i in 0..2 {
            for r in 0..2 {
                assert_abs_diff_eq!(w.entry(i, r), 0.5, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(spectral_gap(&w).unwrap().lambda, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn three_node_star_weights() {
        // Star with center 0: center degree 2, leaves degree 1.
        // Edge weight 1/(1+2) = 1/3; center diagonal 1/3, leaf diagonals 2/3.
        let t = Topology::from_edge_list(3, &[(0, 1), (0, 2)]).unwrap();
        let w = WeightMatrix::metropolis(&t).unwrap();
        assert_abs_diff_eq!(w.entry(0, 1), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.entry(0, 2), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.entry(0, 0), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.entry(1, 1), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.entry(2, 2), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(w.entry(1, 2), 0.0, "leaves are not adjacent");
        let info = spectral_gap(&w).unwrap();
        assert!(info.lambda < 1.0);
    }

    #[test]
    fn three_node_complete_is_uniform() {
        let t = Topology::complete(3).unwrap();
        let w = WeightMatrix::metropolis(&t).unwrap();
        for i in 0..3 {
            for r in 0..3 {
                assert_abs_diff_eq!(w.entry(i, r), 1.0 / 3.0, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(spectral_gap(&w).unwrap().lambda, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ring_eight_second_eigenvalue_matches_closed_form() {
        // 2-regular ring: W = (I + A)/3, circulant; the slowest mode has
        // eigenvalue (1 + 2 cos(2π/8))/3 = (1 + √2)/3.
        let t = Topology::ring(8).unwrap();
        let w = WeightMatrix::metropolis(&t).unwrap();
        let info = spectral_gap(&w).unwrap();
        let expected = (1.0 + std::f64::consts::SQRT_2) / 3.0;
        assert_abs_diff_eq!(info.lambda, expected, epsilon = 1e-12);
    }

    #[test]
    fn exponential_sixteen_metropolis_and_lazy_spectrum() {
        // 7-regular circulant: plain Metropolis W = (I + A)/8 has second
        // eigenvalue exactly 1/2 (the alternating mode); the lazy variant
        // maps it to (1 + 1/2)/2 = 3/4.
        let t = Topology::exponential(16).unwrap();
        let plain = WeightMatrix::metropolis(&t).unwrap();
        assert_abs_diff_eq!(spectral_gap(&plain).unwrap().lambda, 0.5, epsilon = 1e-12);
        let lazy = WeightMatrix::lazy_metropolis(&t).unwrap();
        lazy.validate(Some(&t)).unwrap();
        assert_abs_diff_eq!(spectral_gap(&lazy).unwrap().lambda, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn single_node_matrix_is_identity() {
        let t = Topology::complete(1).unwrap();
        let w = WeightMatrix::metropolis(&t).unwrap();
        assert_eq!(w.entry(0, 0), 1.0);
        assert_abs_diff_eq!(spectral_gap(&w).unwrap().lambda, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn non_mixing_matrix_is_rejected() {
        // Permutation flip: doubly stochastic and symmetric, but periodic;
        // its second eigenvalue is -1.
        let dense = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let w = WeightMatrix::from_dense(&dense).unwrap();
        match spectral_gap(&w) {
            Err(Error::NonMixing { lambda }) => assert!(lambda >= 1.0 - 1e-12),
            other => panic!("expected NonMixing, got {other:?}"),
        }
    }

    #[test]
    fn from_dense_rejects_bad_rows() {
        let dense = DMatrix::from_row_slice(2, 2, &[0.6, 0.6, 0.6, 0.6]);
        assert!(matches!(WeightMatrix::from_dense(&dense), Err(Error::BadWeights(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.2, 0.8]);
        assert!(matches!(WeightMatrix::from_dense(&asym), Err(Error::BadWeights(_))));
    }

    #[test]
    fn text_round_trip_preserves_entries() {
        let t = Topology::exponential(8).unwrap();
        let w = WeightMatrix::metropolis(&t).unwrap();
        let text = w.to_text(GraphKind::Exponential);
        let (back, kind) = WeightMatrix::from_text(&text).unwrap();
        assert_eq!(kind, GraphKind::Exponential);
        for i in 0..8 {
            for r in 0..8 {
                assert_eq!(w.entry(i, r), back.entry(i, r), "entry ({i}, {r})");
            }
        }
    }
}
