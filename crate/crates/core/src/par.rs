//! Sequential / parallel execution of independent work items.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on
//! the rayon global pool; without it every strategy runs on the calling
//! thread. Outputs are always collected in index order, so both strategies
//! return identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batches of independent work items are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Maps a slice, preserving order.
    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }
}

/// Splits `total` work units into shards of at most `shard` units.
pub(crate) fn shard_sizes(total: u64, shard: u64) -> Vec<u64> {
    let full = total / shard;
    let rest = total % shard;
    let mut sizes = vec![shard; full as usize];
    if rest > 0 {
        sizes.push(rest);
    }
    sizes
}
