//! Execution policy for the data-parallel inner loops.
//!
//! Candidate sweeps, basis-column propagation and per-state perturbation sums
//! are embarrassingly parallel. Call sites take an [`Execution`] so benchmarks
//! can compare both paths through the public API; building with
//! `--no-default-features` removes the rayon dependency entirely, in which
//! case `Execution::Parallel` degrades to the sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Map `f` over `items`, sequentially or via rayon depending on `exec`.
pub fn map_collect<T, U, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match exec {
        Execution::Sequential => items.into_iter().map(f).collect(),
        Execution::Parallel => {
            #[cfg(feature = "parallel")]
            {
                items.into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                items.into_iter().map(f).collect()
            }
        }
    }
}

/// Map `f` over indices `0..n`.
pub fn map_indices<U, F>(exec: Execution, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_collect(exec, (0..n).collect(), f)
}
