//! Worker-count-invariant parallel maps over path indices.
//!
//! Results are collected in index order and every reduction downstream is
//! sequential, so aggregated values are bit-identical for any thread count.

use rayon::prelude::*;

/// `(0..n).map(f)` evaluated in parallel, results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Parallel map over a slice, results in input order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}
