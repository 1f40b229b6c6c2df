//! The gradient-tracking family: DSGD, GT-DGD, GT-DSGD, GT-SAGA, and
//! GT-SVRG as synchronous-round state machines over a fixed mixing matrix.
//!
//! Every round has the same shape. Nodes mix their estimates through the
//! weight matrix and take a local step, then (for the GT methods) mix
//! their trackers and fold in the local estimator innovation. A barrier
//! separates the two halves, so within a round every node reads its
//! neighbors' round-k values and never a freshly written k+1 value. The
//! per-node work inside each half runs through [`Exec`] and is bitwise
//! identical whether it runs on one thread or many.
//!
//! Randomness: node i draws components from `node_stream(seed, i)`, the
//! same stream layout the centralized baselines use for node 0. That is
//! what makes the n = 1 reductions in the tests line up trajectory for
//! trajectory. GT-SVRG's option (c) draws its inner pick from a shared
//! auxiliary stream so all nodes agree on the snapshot index.
//!
//! Counters are exact integers, not estimates: after k rounds DSGD has
//! spent k gradient evaluations per node and k communication rounds,
//! GT-DSGD k + 1 evaluations and 2k rounds, GT-SAGA m_i + k evaluations
//! and 2k rounds, and GT-SVRG K·(m_i + 2T) evaluations and 2TK rounds
//! after K outer loops. Metric evaluation reads the oracle outside the
//! algorithm and is never charged.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

use crate::consensus::mix_into;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::Topology;
use crate::metrics::{EvalContext, Recorder, Trace};
use crate::objective::{ComponentOracle, GlmOracle};
use crate::rng::{aux_stream, draw_component, node_stream, TAG_INNER_PICK};
use crate::schedule::StepSchedule;
use crate::vr::{
    svrg_estimator_into, CompactSagaTable, GradientTable, InnerAverager, SagaTable, SvrgOption,
};
use crate::weights::WeightMatrix;

// ---------------------------------------------------------------------------
// configuration

/// Every optimizer in the crate, centralized baselines included. The
/// string forms are the names the experiment config files use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Sgd,
    Saga,
    Svrg,
    Dsgd,
    GtDgd,
    GtDsgd,
    GtSaga,
    GtSvrg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Sgd,
        Algorithm::Saga,
        Algorithm::Svrg,
        Algorithm::Dsgd,
        Algorithm::GtDgd,
        Algorithm::GtDsgd,
        Algorithm::GtSaga,
        Algorithm::GtSvrg,
    ];

    pub fn is_decentralized(self) -> bool {
        !matches!(self, Algorithm::Sgd | Algorithm::Saga | Algorithm::Svrg)
    }

    /// Double-loop methods need an inner length T.
    pub fn has_inner_loop(self) -> bool {
        matches!(self, Algorithm::Svrg | Algorithm::GtSvrg)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::Saga => "saga",
            Algorithm::Svrg => "svrg",
            Algorithm::Dsgd => "dsgd",
            Algorithm::GtDgd => "gt_dgd",
            Algorithm::GtDsgd => "gt_dsgd",
            Algorithm::GtSaga => "gt_saga",
            Algorithm::GtSvrg => "gt_svrg",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown algorithm {s:?}; expected one of sgd, saga, svrg, dsgd, gt_dgd, gt_dsgd, gt_saga, gt_svrg"
                ))
            })
    }
}

/// What to run and for how long. `iterations` counts rounds, except for
/// GT-SVRG where it counts outer loops of `t_inner` rounds each.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub schedule: StepSchedule,
    pub iterations: u64,
    /// Inner-loop length T; only read by the double-loop methods.
    pub t_inner: u64,
    pub option: SvrgOption,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, schedule: StepSchedule, iterations: u64, seed: u64) -> Self {
        RunConfig {
            algorithm,
            schedule,
            iterations,
            t_inner: 1,
            option: SvrgOption::LastIterate,
            seed,
        }
    }

    pub fn with_inner(mut self, t_inner: u64, option: SvrgOption) -> Self {
        self.t_inner = t_inner;
        self.option = option;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Invalid("iteration budget must be at least 1".into()));
        }
        if self.algorithm.has_inner_loop() && self.t_inner == 0 {
            return Err(Error::Invalid("inner loop length T must be at least 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// network state

/// One node's slice of the network, as left behind by the last run.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub theta: DVector<f64>,
    /// Gradient tracker d_k; None for DSGD, which has none.
    pub tracker: Option<DVector<f64>>,
    /// The local estimator the tracker last absorbed (g_k or v_t).
    pub last_estimator: Option<DVector<f64>>,
    /// GT-SAGA's full-vector gradient table. The compact GLM variant
    /// keeps scalars internally and leaves this unset.
    pub saga_table: Option<SagaTable>,
    /// GT-SVRG's inner-loop anchor and its batch gradient.
    pub svrg_anchor: Option<(DVector<f64>, DVector<f64>)>,
}

impl NodeState {
    fn fresh(dim: usize) -> Self {
        NodeState {
            theta: DVector::zeros(dim),
            tracker: None,
            last_estimator: None,
            saga_table: None,
            svrg_anchor: None,
        }
    }
}

/// The whole network. Runners start from the stored `theta`s (zero after
/// [`NetworkState::new`]), reseed the per-node streams from their config,
/// and write the final state back when they return, so the struct always
/// reflects the end of the most recent run.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub nodes: Vec<NodeState>,
    /// Rounds completed by the last run (inner rounds for GT-SVRG).
    pub k: u64,
    /// Per-node gradient-evaluation counters.
    pub grad_evals: Vec<u64>,
    /// Communication rounds; identical across nodes by synchrony.
    pub comm_rounds: u64,
    rngs: Vec<ChaCha8Rng>,
}

impl NetworkState {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Invalid(format!(
                "network needs at least one node and one dimension (got n = {n}, p = {dim})"
            )));
        }
        Ok(NetworkState {
            nodes: (0..n).map(|_| NodeState::fresh(dim)).collect(),
            k: 0,
            grad_evals: vec![0; n],
            comm_rounds: 0,
            rngs: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].theta.len()
    }
}

fn check_setup<O: ComponentOracle>(
    network: &NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    expect: Algorithm,
) -> Result<()> {
    config.validate()?;
    if config.algorithm != expect {
        return Err(Error::Invalid(format!(
            "config names algorithm {} but the {} runner was called",
            config.algorithm, expect
        )));
    }
    let (n, p) = (network.n(), network.dim());
    if oracle.num_nodes() != n || w.n() != n {
        return Err(Error::Invalid(format!(
            "node counts disagree: network {n}, oracle {}, weights {}",
            oracle.num_nodes(),
            w.n()
        )));
    }
    if oracle.dim() != p {
        return Err(Error::Invalid(format!(
            "dimension mismatch: network {p}, oracle {}",
            oracle.dim()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// round machinery

/// Per-node working set for one run. Lives in a contiguous slice so the
/// executor can hand each node its own &mut without locking.
struct Slot<E> {
    rng: ChaCha8Rng,
    /// Estimator the tracker currently carries (g_k, or v_t for GT-SVRG).
    g: DVector<f64>,
    /// Scratch the next estimator is written into before staging.
    fresh: DVector<f64>,
    /// fresh − g, the innovation the tracker mix folds in.
    innov: DVector<f64>,
    evals: u64,
    extra: E,
}

impl<E> Slot<E> {
    fn new(dim: usize, rng: ChaCha8Rng, extra: E) -> Self {
        Slot {
            rng,
            g: DVector::zeros(dim),
            fresh: DVector::zeros(dim),
            innov: DVector::zeros(dim),
            evals: 0,
            extra,
        }
    }

    /// Fold the estimator in `fresh` into the running pair: innov becomes
    /// fresh − g and `g` becomes the new estimator.
    fn stage(&mut self) {
        self.innov.copy_from(&self.fresh);
        self.innov -= &self.g;
        std::mem::swap(&mut self.g, &mut self.fresh);
    }
}

fn max_evals<E>(slots: &[Slot<E>]) -> u64 {
    slots.iter().map(|s| s.evals).max().unwrap_or(0)
}

/// Double-buffered θ and d. `swap` flips both pairs after a round.
struct GtBuffers {
    theta: Vec<DVector<f64>>,
    theta_next: Vec<DVector<f64>>,
    d: Vec<DVector<f64>>,
    d_next: Vec<DVector<f64>>,
}

impl GtBuffers {
    fn new(theta: Vec<DVector<f64>>, dim: usize) -> Self {
        let n = theta.len();
        GtBuffers {
            theta,
            theta_next: vec![DVector::zeros(dim); n],
            d: vec![DVector::zeros(dim); n],
            d_next: vec![DVector::zeros(dim); n],
        }
    }

    fn swap(&mut self) {
        std::mem::swap(&mut self.theta, &mut self.theta_next);
        std::mem::swap(&mut self.d, &mut self.d_next);
    }
}

/// One full gradient-tracking round:
///
///   θ_{k+1} = W θ_k − α d_k
///   d_{k+1} = W d_k + (estimator at θ_{k+1}) − (estimator at θ_k)
///
/// `refresh` writes the node's new estimator into `slot.fresh` given the
/// freshly mixed iterate; the innovation staging and both mixes are
/// shared by every member of the family. Costs two communication rounds.
fn gt_round<E, F>(
    w: &WeightMatrix,
    exec: &Exec,
    alpha: f64,
    bufs: &mut GtBuffers,
    slots: &mut [Slot<E>],
    comm: &mut u64,
    refresh: F,
) where
    E: Send + Sync,
    F: Fn(usize, &mut Slot<E>, &DVector<f64>) + Sync,
{
    mix_into(w, &bufs.theta, &mut bufs.theta_next, exec);
    {
        let d = &bufs.d;
        exec.for_each_node(&mut bufs.theta_next, |i, th| th.axpy(-alpha, &d[i], 1.0));
    }
    {
        let theta_new = &bufs.theta_next;
        exec.for_each_node(slots, |i, s| {
            refresh(i, s, &theta_new[i]);
            s.stage();
        });
    }
    mix_into(w, &bufs.d, &mut bufs.d_next, exec);
    {
        let slots = &*slots;
        exec.for_each_node(&mut bufs.d_next, |i, dn| *dn += &slots[i].innov);
    }
    bufs.swap();
    *comm += 2;
}

/// Record round k if due, cloning the estimators only when the row will
/// actually be kept.
fn snap<E>(
    rec: &mut Recorder,
    ctx: &EvalContext,
    k: u64,
    comm: u64,
    theta: &[DVector<f64>],
    d: &[DVector<f64>],
    slots: &[Slot<E>],
) {
    if rec.due(k) {
        let est: Vec<DVector<f64>> = slots.iter().map(|s| s.g.clone()).collect();
        rec.record(k, max_evals(slots), comm, theta, d, &est);
    } else if ctx.record_iterates {
        rec.record(k, max_evals(slots), comm, theta, &[], &[]);
    }
}

/// Write the run's final state back into the network shell.
fn stash<E>(
    network: &mut NetworkState,
    k: u64,
    comm: u64,
    theta: Vec<DVector<f64>>,
    d: Option<Vec<DVector<f64>>>,
    slots: Vec<Slot<E>>,
) -> Vec<E> {
    network.k = k;
    network.comm_rounds = comm;
    let mut trackers = d.map(|v| v.into_iter());
    let mut extras = Vec::with_capacity(slots.len());
    network.rngs.clear();
    for ((node, th), slot) in network.nodes.iter_mut().zip(theta).zip(slots) {
        node.theta = th;
        node.tracker = trackers.as_mut().and_then(|it| it.next());
        node.last_estimator = Some(slot.g);
        node.saga_table = None;
        node.svrg_anchor = None;
        network.rngs.push(slot.rng);
        extras.push(slot.extra);
    }
    extras
}

// ---------------------------------------------------------------------------
// runners

/// Algorithm 1: each round draws one component per node, mixes θ, and
/// subtracts the local stochastic gradient taken at the pre-mix iterate.
/// One communication round per iteration. With a constant step the bias
/// from heterogeneity never vanishes; the harmonic schedule trades speed
/// for exactness.
pub fn run_dsgd<O: ComponentOracle>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<Trace> {
    check_setup(network, oracle, w, config, Algorithm::Dsgd)?;
    let (n, p) = (network.n(), network.dim());
    let mut theta: Vec<DVector<f64>> = network.nodes.iter().map(|s| s.theta.clone()).collect();
    let mut theta_next = vec![DVector::zeros(p); n];
    let mut slots: Vec<Slot<()>> =
        (0..n).map(|i| Slot::new(p, node_stream(config.seed, i), ())).collect();
    let mut comm = 0u64;
    let mut rec = Recorder::new(ctx, oracle, config.iterations);
    rec.record(0, 0, 0, &theta, &[], &[]);
    for k in 0..config.iterations {
        let alpha = config.schedule.at(k);
        // Gradient at θ_k, before the mix touches it.
        exec.for_each_node(&mut slots, |i, s| {
            let j = draw_component(&mut s.rng, oracle.components(i));
            oracle.component_gradient_into(&theta[i], i, j, &mut s.g);
            s.evals += 1;
        });
        mix_into(w, &theta, &mut theta_next, exec);
        comm += 1;
        {
            let slots = &slots;
            exec.for_each_node(&mut theta_next, |i, th| th.axpy(-alpha, &slots[i].g, 1.0));
        }
        std::mem::swap(&mut theta, &mut theta_next);
        if rec.due(k + 1) || ctx.record_iterates {
            rec.record(k + 1, max_evals(&slots), comm, &theta, &[], &[]);
        }
    }
    let final_evals: Vec<u64> = slots.iter().map(|s| s.evals).collect();
    stash(network, config.iterations, comm, theta, None, slots);
    network.grad_evals = final_evals;
    Ok(rec.finish())
}

/// Gradient tracking with exact local batch gradients. Deterministic, and
/// the reference point for the zero-noise reductions: every stochastic
/// member of the family collapses to this trajectory when m_i = 1.
pub fn run_gt_dgd<O: ComponentOracle>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<Trace> {
    check_setup(network, oracle, w, config, Algorithm::GtDgd)?;
    let (n, p) = (network.n(), network.dim());
    let theta0: Vec<DVector<f64>> = network.nodes.iter().map(|s| s.theta.clone()).collect();
    let mut bufs = GtBuffers::new(theta0, p);
    let mut slots: Vec<Slot<()>> =
        (0..n).map(|i| Slot::new(p, node_stream(config.seed, i), ())).collect();
    // d_0 = local batch gradient at θ_0.
    {
        let theta = &bufs.theta;
        exec.for_each_node(&mut slots, |i, s| {
            oracle.local_gradient_into(&theta[i], i, &mut s.g);
            s.evals += oracle.components(i) as u64;
        });
    }
    for (d, s) in bufs.d.iter_mut().zip(&slots) {
        d.copy_from(&s.g);
    }
    let mut comm = 0u64;
    let mut rec = Recorder::new(ctx, oracle, config.iterations);
    snap(&mut rec, ctx, 0, comm, &bufs.theta, &bufs.d, &slots);
    for k in 0..config.iterations {
        gt_round(w, exec, config.schedule.at(k), &mut bufs, &mut slots, &mut comm, |i, s, th| {
            oracle.local_gradient_into(th, i, &mut s.fresh);
            s.evals += oracle.components(i) as u64;
        });
        snap(&mut rec, ctx, k + 1, comm, &bufs.theta, &bufs.d, &slots);
    }
    finish_gt(network, config.iterations, comm, bufs, slots);
    Ok(rec.finish())
}

/// Algorithm 2: gradient tracking over single-sample gradients. The
/// tracker starts at the first sampled gradient, and each round draws the
/// next sample at the freshly mixed iterate. Two communication rounds per
/// iteration buy an O(1/k)-exact trajectory under the harmonic schedule
/// and a heterogeneity-free plateau under a constant one.
pub fn run_gt_dsgd<O: ComponentOracle>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<Trace> {
    check_setup(network, oracle, w, config, Algorithm::GtDsgd)?;
    let (n, p) = (network.n(), network.dim());
    let theta0: Vec<DVector<f64>> = network.nodes.iter().map(|s| s.theta.clone()).collect();
    let mut bufs = GtBuffers::new(theta0, p);
    let mut slots: Vec<Slot<()>> =
        (0..n).map(|i| Slot::new(p, node_stream(config.seed, i), ())).collect();
    // d_0 = g_0 = ∇f_{i,s_0}(θ_0), one draw per node.
    {
        let theta = &bufs.theta;
        exec.for_each_node(&mut slots, |i, s| {
            let j = draw_component(&mut s.rng, oracle.components(i));
            oracle.component_gradient_into(&theta[i], i, j, &mut s.g);
            s.evals += 1;
        });
    }
    for (d, s) in bufs.d.iter_mut().zip(&slots) {
        d.copy_from(&s.g);
    }
    let mut comm = 0u64;
    let mut rec = Recorder::new(ctx, oracle, config.iterations);
    snap(&mut rec, ctx, 0, comm, &bufs.theta, &bufs.d, &slots);
    for k in 0..config.iterations {
        gt_round(w, exec, config.schedule.at(k), &mut bufs, &mut slots, &mut comm, |i, s, th| {
            let j = draw_component(&mut s.rng, oracle.components(i));
            oracle.component_gradient_into(th, i, j, &mut s.fresh);
            s.evals += 1;
        });
        snap(&mut rec, ctx, k + 1, comm, &bufs.theta, &bufs.d, &slots);
    }
    finish_gt(network, config.iterations, comm, bufs, slots);
    Ok(rec.finish())
}

fn gt_saga_core<O, Tb>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<(Trace, Vec<Tb>)>
where
    O: ComponentOracle,
    Tb: GradientTable<O> + Send + Sync,
{
    check_setup(network, oracle, w, config, Algorithm::GtSaga)?;
    let (n, p) = (network.n(), network.dim());
    let theta0: Vec<DVector<f64>> = network.nodes.iter().map(|s| s.theta.clone()).collect();
    let mut bufs = GtBuffers::new(theta0, p);
    // Tables are filled at θ_0, so g_0 is exactly the local batch
    // gradient and d_0 = g_0 starts the tracker on the conservation law.
    let mut slots: Vec<Slot<Tb>> = Vec::with_capacity(n);
    for i in 0..n {
        let table = Tb::init(oracle, i, &bufs.theta[i]);
        let mut slot = Slot::new(p, node_stream(config.seed, i), table);
        slot.extra.mean_now(oracle, i, &bufs.theta[i], &mut slot.g);
        slot.evals = oracle.components(i) as u64;
        slots.push(slot);
    }
    for (d, s) in bufs.d.iter_mut().zip(&slots) {
        d.copy_from(&s.g);
    }
    let mut comm = 0u64;
    let mut rec = Recorder::new(ctx, oracle, config.iterations);
    snap(&mut rec, ctx, 0, comm, &bufs.theta, &bufs.d, &slots);
    for k in 0..config.iterations {
        gt_round(w, exec, config.schedule.at(k), &mut bufs, &mut slots, &mut comm, |i, s, th| {
            let j = draw_component(&mut s.rng, oracle.components(i));
            s.extra.step(oracle, i, j, th, &mut s.fresh);
            s.evals += 1;
        });
        snap(&mut rec, ctx, k + 1, comm, &bufs.theta, &bufs.d, &slots);
    }
    let tables = finish_gt(network, config.iterations, comm, bufs, slots);
    Ok((rec.finish(), tables))
}

/// Algorithm 3: per-node SAGA estimators under gradient tracking. One
/// charged gradient evaluation per node per round after the m_i-entry
/// table fill; linear convergence to θ* itself under a constant step.
pub fn run_gt_saga<O: ComponentOracle>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<Trace> {
    let (trace, tables) = gt_saga_core::<O, SagaTable>(network, oracle, w, config, ctx, exec)?;
    for (node, table) in network.nodes.iter_mut().zip(tables) {
        node.saga_table = Some(table);
    }
    Ok(trace)
}

/// GT-SAGA with the scalar-per-component table for GLM-shaped objectives.
/// Same estimator contract, a different (still unbiased) split of the
/// shared regularizer; see the compact table in the variance-reduction
/// module for the exact difference.
pub fn run_gt_saga_compact<O: GlmOracle>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<Trace> {
    let (trace, _tables) =
        gt_saga_core::<O, CompactSagaTable>(network, oracle, w, config, ctx, exec)?;
    Ok(trace)
}

/// Per-node extras for GT-SVRG: the inner-loop anchor, its batch
/// gradient, and the buffers the outer options need.
struct SvrgExtra {
    anchor: DVector<f64>,
    batch: DVector<f64>,
    scratch: DVector<f64>,
    avg: InnerAverager,
    pick: DVector<f64>,
}

impl SvrgExtra {
    fn new(dim: usize) -> Self {
        SvrgExtra {
            anchor: DVector::zeros(dim),
            batch: DVector::zeros(dim),
            scratch: DVector::zeros(dim),
            avg: InnerAverager::new(dim),
            pick: DVector::zeros(dim),
        }
    }
}

/// Algorithm 4: the double-loop variance-reduced member. Each outer loop
/// re-anchors at the current iterate and pays m_i batch evaluations plus
/// 2 per inner round; the tracker d and estimator v carry across the loop
/// boundary untouched, which is what keeps the tracker-average identity
/// exact globally. `config.iterations` counts outer loops; trace rows use
/// k = cumulative inner rounds, and the row at each multiple of T holds
/// the post-option iterate.
pub fn run_gt_svrg<O: ComponentOracle>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<Trace> {
    check_setup(network, oracle, w, config, Algorithm::GtSvrg)?;
    let (n, p) = (network.n(), network.dim());
    let t_inner = config.t_inner;
    let outer_loops = config.iterations;
    let theta0: Vec<DVector<f64>> = network.nodes.iter().map(|s| s.theta.clone()).collect();
    let mut bufs = GtBuffers::new(theta0, p);
    let mut slots: Vec<Slot<SvrgExtra>> = (0..n)
        .map(|i| Slot::new(p, node_stream(config.seed, i), SvrgExtra::new(p)))
        .collect();
    // Shared pick stream so every node snapshots the same inner index
    // under option (c); identical to the centralized stream, which is
    // what the n = 1 reduction leans on.
    let mut pick_rng = aux_stream(config.seed, TAG_INNER_PICK);
    let mut comm = 0u64;
    let mut rec = Recorder::new(ctx, oracle, outer_loops * t_inner);
    rec.record(0, 0, 0, &bufs.theta, &[], &[]);
    for k in 0..outer_loops {
        {
            let theta = &bufs.theta;
            exec.for_each_node(&mut slots, |i, s| {
                s.extra.anchor.copy_from(&theta[i]);
                oracle.local_gradient_into(&s.extra.anchor, i, &mut s.extra.batch);
                s.evals += oracle.components(i) as u64;
                // The first loop initializes v_0 = d_0 to the batch
                // gradient; later loops carry v and d across.
                if k == 0 {
                    s.g.copy_from(&s.extra.batch);
                }
                if config.option == SvrgOption::InnerAverage {
                    s.extra.avg.reset();
                }
            });
        }
        if k == 0 {
            for (d, s) in bufs.d.iter_mut().zip(&slots) {
                d.copy_from(&s.g);
            }
        }
        let tau = match config.option {
            SvrgOption::RandomInner => draw_component(&mut pick_rng, t_inner as usize) as u64,
            _ => 0,
        };
        for t in 0..t_inner {
            if config.option == SvrgOption::InnerAverage {
                let theta = &bufs.theta;
                exec.for_each_node(&mut slots, |i, s| s.extra.avg.push(&theta[i]));
            }
            if config.option == SvrgOption::RandomInner && t == tau {
                let theta = &bufs.theta;
                exec.for_each_node(&mut slots, |i, s| s.extra.pick.copy_from(&theta[i]));
            }
            let alpha = config.schedule.at(k * t_inner + t);
            gt_round(w, exec, alpha, &mut bufs, &mut slots, &mut comm, |i, s, th| {
                let j = draw_component(&mut s.rng, oracle.components(i));
                svrg_estimator_into(
                    oracle,
                    i,
                    j,
                    th,
                    &s.extra.anchor,
                    &s.extra.batch,
                    &mut s.extra.scratch,
                    &mut s.fresh,
                );
                s.evals += 2;
            });
            if t + 1 < t_inner {
                snap(&mut rec, ctx, k * t_inner + t + 1, comm, &bufs.theta, &bufs.d, &slots);
            }
        }
        match config.option {
            SvrgOption::LastIterate => {}
            SvrgOption::InnerAverage => {
                let slots = &slots;
                exec.for_each_node(&mut bufs.theta, |i, th| slots[i].extra.avg.mean_into(th));
            }
            SvrgOption::RandomInner => {
                let slots = &slots;
                exec.for_each_node(&mut bufs.theta, |i, th| th.copy_from(&slots[i].extra.pick));
            }
        }
        snap(&mut rec, ctx, (k + 1) * t_inner, comm, &bufs.theta, &bufs.d, &slots);
    }
    let extras = finish_gt(network, outer_loops * t_inner, comm, bufs, slots);
    for (node, extra) in network.nodes.iter_mut().zip(extras) {
        node.svrg_anchor = Some((extra.anchor, extra.batch));
    }
    Ok(rec.finish())
}

/// Common tail for the tracking runners: move buffers and slots back into
/// the network shell and hand the extras to the caller.
fn finish_gt<E>(
    network: &mut NetworkState,
    k: u64,
    comm: u64,
    bufs: GtBuffers,
    slots: Vec<Slot<E>>,
) -> Vec<E> {
    let final_evals: Vec<u64> = slots.iter().map(|s| s.evals).collect();
    let extras = stash(network, k, comm, bufs.theta, Some(bufs.d), slots);
    network.grad_evals = final_evals;
    extras
}

/// Dispatch on the config's algorithm tag. Centralized tags are rejected
/// here; they need a pooled single-node oracle and live in the
/// centralized module.
pub fn run<O: ComponentOracle>(
    network: &mut NetworkState,
    oracle: &O,
    w: &WeightMatrix,
    config: &RunConfig,
    ctx: &EvalContext,
    exec: &Exec,
) -> Result<Trace> {
    match config.algorithm {
        Algorithm::Dsgd => run_dsgd(network, oracle, w, config, ctx, exec),
        Algorithm::GtDgd => run_gt_dgd(network, oracle, w, config, ctx, exec),
        Algorithm::GtDsgd => run_gt_dsgd(network, oracle, w, config, ctx, exec),
        Algorithm::GtSaga => run_gt_saga(network, oracle, w, config, ctx, exec),
        Algorithm::GtSvrg => run_gt_svrg(network, oracle, w, config, ctx, exec),
        other => Err(Error::Invalid(format!(
            "{other} is a centralized baseline; pool the oracle and use the centralized runners"
        ))),
    }
}

/// Per-node transmission counts implied by a trace: every communication
/// round, node i sends its current p-vector to each of its degree(i)
/// neighbors.
pub fn communication_cost(trace: &Trace, topo: &Topology) -> Vec<u64> {
    let rounds = trace.records.last().map_or(0, |r| r.comm_rounds_per_node);
    (0..topo.n()).map(|i| rounds * topo.degree(i) as u64).collect()
}

// ---------------------------------------------------------------------------
