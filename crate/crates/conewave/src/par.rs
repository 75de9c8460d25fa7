//! Data-parallel helpers with a sequential fallback.
//!
//! Everything here is order-preserving: parallel maps collect in index
//! order and reductions sum fixed per-chunk partials sequentially, so
//! results are bit-identical with and without the `parallel` feature.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Always-sequential variant, kept callable for benchmarks.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Sums per-index partials in a deterministic order: the partials are
/// computed in parallel but accumulated sequentially by index.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(n, f).into_iter().sum()
}

/// Sequential twin of [`sum_indexed`].
pub fn sum_indexed_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).sum()
}
