//! Thread-pool plumbing for per-node work.
//!
//! Decentralized rounds are embarrassingly parallel across nodes: each node
//! reads the previous round's shared state and writes only its own slot.
//! [`Exec::for_each_node`] runs such a closure either serially or on a
//! dedicated rayon pool. Because every slot is written by exactly one task
//! and all reductions happen inside a single node's closure in a fixed
//! order, results are bit-identical for any thread count.

use rayon::prelude::*;

pub struct Exec {
    pool: Option<rayon::ThreadPool>,
}

impl Exec {
    /// Build an executor with the requested number of worker threads.
    /// `threads <= 1` means plain serial execution with no pool at all.
    pub fn new(threads: usize) -> Self {
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .expect("failed to build rayon pool"),
            )
        } else {
            None
        };
        Exec { pool }
    }

    pub fn serial() -> Self {
        Exec { pool: None }
    }

    /// Apply `f(i, &mut items[i])` for every i, in parallel when a pool is
    /// configured. `f` must not touch any slot other than its own.
    pub fn for_each_node<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync,
    {
        match &self.pool {
            Some(pool) => pool.install(|| {
                items.par_iter_mut().enumerate().for_each(|(i, item)| f(i, item));
            }),
            None => {
                for (i, item) in items.iter_mut().enumerate() {
                    f(i, item);
                }
            }
        }
    }
}
