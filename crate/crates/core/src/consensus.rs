//! Average-consensus primitives on stacked per-node states.
//!
//! A network state is a slice of n vectors, one p-dimensional block per
//! node. [`mix_into`] applies the mixing matrix blockwise, which is the
//! action of W ⊗ I_p without ever materializing the Kronecker product:
//! row i costs degree(i)+1 axpy operations over its stored neighbors, summed
//! in ascending node order so results do not depend on thread count.
//!
//! Repeated mixing drives every block to the initial network average at a
//! linear rate: disagreement shrinks by the factor λ from
//! [`crate::weights::spectral_gap`] each round, and the average itself is
//! preserved to machine precision because W is doubly stochastic.
//!
//! [`dac_step`] is the dynamic average consensus update
//! d⁺ = W d + r⁺ − r, which keeps the network mean of d pinned to the
//! network mean of the reference signal r at every step. Gradient-tracking
//! optimizers are this recursion with r = local gradient estimates.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::weights::WeightMatrix;

/// Check that `x` is a valid stacked state for `w`: one block per node,
/// all blocks the same dimension.
fn check_blocks(w: &WeightMatrix, x: &[DVector<f64>]) -> Result<usize> {
    if x.len() != w.n() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} blocks but the matrix has {} nodes",
            x.len(),
            w.n()
        )));
    }
    let p = x.first().map(|b| b.len()).unwrap_or(0);
    for (i, b) in x.iter().enumerate() {
        if b.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "block {i} has dimension {} but block 0 has {p}",
                b.len()
            )));
        }
    }
    Ok(p)
}

/// out[i] = Σ_r w_ir x[r], summed over the stored sparse row in ascending
/// column order.
pub fn mix_into(w: &WeightMatrix, x: &[DVector<f64>], out: &mut [DVector<f64>], exec: &Exec) {
    debug_assert_eq!(x.len(), w.n());
    debug_assert_eq!(out.len(), w.n());
    exec.for_each_node(out, |i, block| {
        block.fill(0.0);
        for &(r, wv) in w.row(i) {
            block.axpy(wv, &x[r], 1.0);
        }
    });
}

pub fn mix(w: &WeightMatrix, x: &[DVector<f64>], exec: &Exec) -> Result<Vec<DVector<f64>>> {
    let p = check_blocks(w, x)?;
    let mut out = vec![DVector::zeros(p); x.len()];
    mix_into(w, x, &mut out, exec);
    Ok(out)
}

/// One dynamic-average-consensus step: d⁺ = W d + (r_new − r_old).
pub fn dac_step(
    w: &WeightMatrix,
    d: &[DVector<f64>],
    r_new: &[DVector<f64>],
    r_old: &[DVector<f64>],
    exec: &Exec,
) -> Result<Vec<DVector<f64>>> {
    let p = check_blocks(w, d)?;
    if r_new.len() != d.len() || r_old.len() != d.len() {
        return Err(Error::DimensionMismatch(
            "reference signals must have one block per node".into(),
        ));
    }
    let mut out = vec![DVector::zeros(p); d.len()];
    mix_into(w, d, &mut out, exec);
    exec.for_each_node(&mut out, |i, block| {
        *block += &r_new[i];
        *block -= &r_old[i];
    });
    Ok(out)
}

/// Mean block of a stacked state.
pub fn network_mean(x: &[DVector<f64>]) -> DVector<f64> {
    let p = x.first().map(|b| b.len()).unwrap_or(0);
    let mut mean = DVector::zeros(p);
    for b in x {
        mean += b;
    }
    mean /= x.len() as f64;
    mean
}

/// Stacked disagreement norm sqrt(Σ_i ‖x_i − x̄‖²).
pub fn disagreement(x: &[DVector<f64>]) -> f64 {
    let mean = network_mean(x);
    x.iter().map(|b| (b - &mean).norm_squared()).sum::<f64>().sqrt()
}

/// Run plain consensus for `iterations` rounds and record the disagreement
/// after every round, including round zero.
pub fn run_consensus(
    w: &WeightMatrix,
    x0: &[DVector<f64>],
    iterations: usize,
    exec: &Exec,
) -> Result<Vec<f64>> {
    let p = check_blocks(w, x0)?;
    let mut cur: Vec<DVector<f64>> = x0.to_vec();
    let mut next = vec![DVector::zeros(p); cur.len()];
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(disagreement(&cur));
    for _ in 0..iterations {
        mix_into(w, &cur, &mut next, exec);
        std::mem::swap(&mut cur, &mut next);
        trace.push(disagreement(&cur));
    }
    Ok(trace)
}

/// Per-round contraction factor fitted to a disagreement trace.
///
/// Least-squares slope of log disagreement over rounds `window.0..=window.1`,
/// skipping entries at or below the floor where rounding noise dominates
/// (disagreement < 1e-13). Returns the contraction factor e^slope.
pub fn contraction_rate(trace: &[f64], window: (usize, usize)) -> Result<f64> {
    let (lo, hi) = window;
    if hi >= trace.len() || lo >= hi {
        return Err(Error::Invalid(format!(
            "fit window {lo}..={hi} does not fit a trace of length {}",
            trace.len()
        )));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi)
        .filter(|&k| trace[k] >= 1e-13)
        .map(|k| (k as f64, trace[k].ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Invalid(
            "disagreement already at the floor over the whole fit window".into(),
        ));
    }
    let fit = crate::metrics::log_linear_fit_points(&pts);
    Ok(fit.slope.exp())
}

// ---------------------------------------------------------------------------
