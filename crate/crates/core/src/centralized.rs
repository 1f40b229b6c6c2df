//! Centralized SGD, SAGA, and SVRG on a single-node oracle.
//!
//! These are the comparators the decentralized methods are measured
//! against, and the single-node oracles the n = 1 equivalence tests reduce
//! to. Each runner is the exact one-node specialization of its
//! decentralized counterpart: same estimator code, same draw order, same
//! RNG stream (node 0), so handing both the same seed yields matching
//! trajectories. Multi-node problems are pooled through
//! [`crate::PooledOracle`] before they get here.
//!
//! Gradient-evaluation counters are exact: after k iterations SGD has
//! spent k evaluations, SAGA k plus the N-entry table initialization, and
//! SVRG N + 2T per outer loop.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::metrics::{EvalContext, Recorder, Trace};
use crate::objective::{ComponentOracle, GlmOracle};
use crate::rng::{aux_stream, draw_component, node_stream, TAG_INNER_PICK};
use crate::schedule::StepSchedule;
use crate::vr::{svrg_estimator_into, CompactSagaTable, GradientTable, InnerAverager, SagaTable, SvrgOption};

fn require_single_node<O: ComponentOracle>(oracle: &O) -> Result<()> {
    if oracle.num_nodes() != 1 {
        return Err(Error::Invalid(format!(
            "centralized baselines need a single-node oracle; got {} nodes (pool it first)",
            oracle.num_nodes()
        )));
    }
    Ok(())
}

/// θ_{k+1} = θ_k − α_k ∇f_{s_k}(θ_k) with s_k uniform with replacement.
pub fn run_sgd<O: ComponentOracle>(
    oracle: &O,
    schedule: StepSchedule,
    iterations: u64,
    seed: u64,
    ctx: &EvalContext,
) -> Result<Trace> {
    require_single_node(oracle)?;
    let p = oracle.dim();
    let m = oracle.components(0);
    let mut rng = node_stream(seed, 0);
    let mut theta = vec![DVector::<f64>::zeros(p)];
    let mut grad = DVector::zeros(p);
    let mut rec = Recorder::new(ctx, oracle, iterations);
    rec.record(0, 0, 0, &theta, &[], &[]);
    for k in 0..iterations {
        let j = draw_component(&mut rng, m);
        oracle.component_gradient_into(&theta[0], 0, j, &mut grad);
        theta[0].axpy(-schedule.at(k), &grad, 1.0);
        rec.record(k + 1, k + 1, 0, &theta, &[], &[]);
    }
    Ok(rec.finish())
}

fn saga_core<O, Tb>(
    oracle: &O,
    alpha: f64,
    iterations: u64,
    seed: u64,
    ctx: &EvalContext,
) -> Result<Trace>
where
    O: ComponentOracle,
    Tb: GradientTable<O>,
{
    require_single_node(oracle)?;
    if alpha <= 0.0 {
        return Err(Error::Invalid(format!("step size must be positive (got {alpha})")));
    }
    let p = oracle.dim();
    let m = oracle.components(0) as u64;
    let mut rng = node_stream(seed, 0);
    let mut theta = vec![DVector::<f64>::zeros(p)];
    let mut table = Tb::init(oracle, 0, &theta[0]);
    let mut g = DVector::zeros(p);
    table.mean_now(oracle, 0, &theta[0], &mut g);
    let mut rec = Recorder::new(ctx, oracle, iterations);
    rec.record(0, m, 0, &theta, &[], &[]);
    for k in 0..iterations {
        theta[0].axpy(-alpha, &g, 1.0);
        let j = draw_component(&mut rng, oracle.components(0));
        table.step(oracle, 0, j, &theta[0], &mut g);
        rec.record(k + 1, m + k + 1, 0, &theta, &[], &[]);
    }
    Ok(rec.finish())
}

/// SAGA with a full-vector gradient table: each iteration moves along the
/// current estimator, then refreshes it at the sampled component with the
/// table's running average. The k = 0 estimator is the table mean, which
/// at a fresh table is exactly the batch gradient.
pub fn run_saga<O: ComponentOracle>(
    oracle: &O,
    alpha: f64,
    iterations: u64,
    seed: u64,
    ctx: &EvalContext,
) -> Result<Trace> {
    saga_core::<O, SagaTable>(oracle, alpha, iterations, seed, ctx)
}

/// SAGA with the scalar-per-component table for GLM-shaped objectives.
/// A different (still unbiased) estimator than [`run_saga`]: the shared
/// regularizer term is applied exactly at the current iterate instead of
/// lagging in the table.
pub fn run_saga_compact<O: GlmOracle>(
    oracle: &O,
    alpha: f64,
    iterations: u64,
    seed: u64,
    ctx: &EvalContext,
) -> Result<Trace> {
    saga_core::<O, CompactSagaTable>(oracle, alpha, iterations, seed, ctx)
}

/// Double-loop SVRG. Each outer loop anchors at the current iterate,
/// computes the exact batch gradient there, and runs T inner steps with
/// the anchored estimator; the estimator carries across loop boundaries,
/// so the first inner step of a loop still descends along the previous
/// loop's final estimator.
///
/// Trace rows use k = cumulative inner steps; outer boundaries land at
/// multiples of T and record the post-option iterate.
pub fn run_svrg<O: ComponentOracle>(
    oracle: &O,
    alpha: f64,
    t_inner: u64,
    outer_loops: u64,
    option: SvrgOption,
    seed: u64,
    ctx: &EvalContext,
) -> Result<Trace> {
    require_single_node(oracle)?;
    if t_inner == 0 {
        return Err(Error::Invalid("inner loop length T must be at least 1".into()));
    }
    if alpha <= 0.0 {
        return Err(Error::Invalid(format!("step size must be positive (got {alpha})")));
    }
    let p = oracle.dim();
    let m = oracle.components(0) as u64;
    let mut rng = node_stream(seed, 0);
    let mut pick = aux_stream(seed, TAG_INNER_PICK);
    let mut theta = vec![DVector::<f64>::zeros(p)];
    let mut v = DVector::zeros(p);
    let mut anchor = DVector::zeros(p);
    let mut batch_anchor = DVector::zeros(p);
    let mut scratch = DVector::zeros(p);
    let mut averager = InnerAverager::new(p);
    let mut snapshot = DVector::zeros(p);
    let mut evals = 0u64;
    let mut rec = Recorder::new(ctx, oracle, outer_loops * t_inner);
    rec.record(0, 0, 0, &theta, &[], &[]);
    for k in 0..outer_loops {
        anchor.copy_from(&theta[0]);
        oracle.local_gradient_into(&anchor, 0, &mut batch_anchor);
        evals += m;
        if k == 0 {
            v.copy_from(&batch_anchor);
        }
        let tau = match option {
            SvrgOption::RandomInner => draw_component(&mut pick, t_inner as usize) as u64,
            _ => 0,
        };
        averager.reset();
        for t in 0..t_inner {
            if option == SvrgOption::InnerAverage {
                averager.push(&theta[0]);
            }
            if option == SvrgOption::RandomInner && t == tau {
                snapshot.copy_from(&theta[0]);
            }
            theta[0].axpy(-alpha, &v, 1.0);
            let j = draw_component(&mut rng, oracle.components(0));
            svrg_estimator_into(oracle, 0, j, &theta[0], &anchor, &batch_anchor, &mut scratch, &mut v);
            evals += 2;
            if t + 1 < t_inner {
                rec.record(k * t_inner + t + 1, evals, 0, &theta, &[], &[]);
            }
        }
        match option {
            SvrgOption::LastIterate => {}
            SvrgOption::InnerAverage => averager.mean_into(&mut theta[0]),
            SvrgOption::RandomInner => theta[0].copy_from(&snapshot),
        }
        rec.record((k + 1) * t_inner, evals, 0, &theta, &[], &[]);
    }
    Ok(rec.finish())
}

// ---------------------------------------------------------------------------
