//! Peer-to-peer communication topologies.
//!
//! A [`Topology`] is a connected, undirected, simple graph over nodes
//! `0..n`. Four families are supported:
//!
//! | kind                | construction                                            |
//! |---------------------|---------------------------------------------------------|
//! | `ring`              | cycle, node i adjacent to i±1 mod n                     |
//! | `complete`          | every pair adjacent                                     |
//! | `exponential`       | circulant, i adjacent to i±2^j mod n, j=0..⌊log2 n⌋−1   |
//! | `random_geometric`  | uniform points in the unit square, edge iff dist ≤ r    |
//!
//! The deterministic families are connected by construction. A random
//! geometric draw may come out disconnected; that is reported as an error
//! naming the seed and radius rather than silently retried, so a run's
//! provenance stays exact.
//!
//! Neighbor lists are kept sorted. All iteration over neighbors happens in
//! ascending index order, which downstream mixing code relies on for
//! bit-reproducible summation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Ring,
    Complete,
    Exponential,
    RandomGeometric,
    /// Hand-supplied edge list; never produced by [`Topology::build`].
    Custom,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphKind::Ring => "ring",
            GraphKind::Complete => "complete",
            GraphKind::Exponential => "exponential",
            GraphKind::RandomGeometric => "random_geometric",
            GraphKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(GraphKind::Ring),
            "complete" => Ok(GraphKind::Complete),
            "exponential" => Ok(GraphKind::Exponential),
            "random_geometric" => Ok(GraphKind::RandomGeometric),
            "custom" => Ok(GraphKind::Custom),
            other => Err(Error::Invalid(format!(
                "unknown graph kind `{other}` (expected ring, complete, exponential, random_geometric)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Topology {
    kind: GraphKind,
    n: usize,
    /// Sorted neighbor lists, self excluded.
    neighbors: Vec<Vec<usize>>,
    /// Draw parameters for the random family, kept for provenance.
    seed: Option<u64>,
    radius: Option<f64>,
}

impl Topology {
    /// Dispatch on kind. `radius` and `seed` are only consulted for
    /// `random_geometric`; passing them for other kinds is an error so that
    /// configs cannot silently carry dead parameters.
    pub fn build(kind: GraphKind, n: usize, radius: Option<f64>, seed: Option<u64>) -> Result<Self> {
        match kind {
            GraphKind::RandomGeometric => {
                let radius = radius.ok_or_else(|| {
                    Error::Invalid("random_geometric graph requires a radius".into())
                })?;
                let seed = seed
                    .ok_or_else(|| Error::Invalid("random_geometric graph requires a seed".into()))?;
                Self::random_geometric(n, radius, seed)
            }
            _ => {
                if radius.is_some() {
                    return Err(Error::Invalid(format!("{kind} graph takes no radius")));
                }
                if seed.is_some() {
                    return Err(Error::Invalid(format!("{kind} graph takes no seed")));
                }
                match kind {
                    GraphKind::Ring => Self::ring(n),
                    GraphKind::Complete => Self::complete(n),
                    GraphKind::Exponential => Self::exponential(n),
                    GraphKind::Custom => Err(Error::Invalid(
                        "custom topologies are built with from_edge_list, not build".into(),
                    )),
                    GraphKind::RandomGeometric => unreachable!(),
                }
            }
        }
    }

    /// Connected topology from an explicit undirected edge list.
    /// Duplicate edges collapse; self-loops are rejected.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        for &(i, r) in edges {
            if i >= n || r >= n {
                return Err(Error::Invalid(format!("edge ({i}, {r}) out of range for n = {n}")));
            }
            if i == r {
                return Err(Error::Invalid(format!("self-loop on node {i} is not an edge")));
            }
        }
        Self::from_edges(GraphKind::Custom, n, edges.iter().copied())
    }

    pub fn ring(n: usize) -> Result<Self> {
        let edges = (0..n).filter(|_| n > 1).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>();
        Self::from_edges(GraphKind::Ring, n, edges.into_iter())
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for r in (i + 1)..n {
                edges.push((i, r));
            }
        }
        Self::from_edges(GraphKind::Complete, n, edges.into_iter())
    }

    /// Power-of-two circulant: node i is adjacent to i ± 2^j mod n for
    /// j = 0..⌊log2 n⌋−1. Offsets that coincide (for example ±8 on 16
    /// nodes) collapse to a single edge, so a 16-node graph is 7-regular.
    pub fn exponential(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let hops = if n > 1 { usize::BITS - n.leading_zeros() - 1 } else { 0 };
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..hops {
                let o = 1usize << j;
                edges.push((i, (i + o) % n));
            }
        }
        Self::from_edges(GraphKind::Exponential, n, edges.into_iter())
    }

    /// Uniform points in the unit square, edge wherever the Euclidean
    /// distance is at most `radius`. The draw is fully determined by the
    /// seed: coordinates come out of one ChaCha stream in node order,
    /// x before y.
    pub fn random_geometric(n: usize, radius: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if !(radius > 0.0 && radius <= std::f64::consts::SQRT_2) {
            return Err(Error::BadRadius { radius });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<(f64, f64)> =
            (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let r2 = radius * radius;
        let mut edges = Vec::new();
        for i in 0..n {
            for r in (i + 1)..n {
                let dx = points[i].0 - points[r].0;
                let dy = points[i].1 - points[r].1;
                if dx * dx + dy * dy <= r2 {
                    edges.push((i, r));
                }
            }
        }
        let mut topo = Self::from_edges(GraphKind::RandomGeometric, n, edges.into_iter())
            .map_err(|e| match e {
                Error::Disconnected => Error::DisconnectedDraw { seed, radius },
                other => other,
            })?;
        topo.seed = Some(seed);
        topo.radius = Some(radius);
        Ok(topo)
    }

    fn from_edges(
        kind: GraphKind,
        n: usize,
        edges: impl Iterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut set = BTreeSet::new();
        for (i, r) in edges {
            assert!(i < n && r < n, "edge ({i}, {r}) out of range for n = {n}");
            if i != r {
                set.insert((i.min(r), i.max(r)));
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, r) in &set {
            neighbors[i].push(r);
            neighbors[r].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let topo = Topology { kind, n, neighbors, seed: None, radius: None };
        if !topo.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(topo)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Sorted neighbors of `i`, self excluded.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn is_edge(&self, i: usize, r: usize) -> bool {
        i != r && self.neighbors[i].binary_search(&r).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges as (i, r) pairs with i < r, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for &r in &self.neighbors[i] {
                if r > i {
                    out.push((i, r));
                }
            }
        }
        out
    }

    /// Seed of the random draw, if this topology came from one.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &r in &self.neighbors[i] {
                if !seen[r] {
                    seen[r] = true;
                    count += 1;
                    stack.push(r);
                }
            }
        }
        count == self.n
    }
}

// ---------------------------------------------------------------------------
