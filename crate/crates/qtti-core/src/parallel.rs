//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these run on the rayon global pool;
//! without it they degrade to plain loops so all downstream code is written
//! once. Reductions are always performed in index order over the collected
//! buffer, so results are bit-identical with and without the feature and
//! independent of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, preserving index order in the output.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving index order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    map_indexed_seq(n, f)
}

/// Sequential twin of [`map_indexed`], available regardless of features.
/// Benchmarks compare the two directly.
pub fn map_indexed_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sum `f(i)` for `i in 0..n` with a deterministic, index-ordered reduction.
pub fn sum_indexed<F: Fn(usize) -> f64 + Sync + Send>(n: usize, f: F) -> f64 {
    map_indexed(n, f).iter().sum()
}

/// Sequential twin of [`sum_indexed`].
pub fn sum_indexed_seq<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    map_indexed_seq(n, f).iter().sum()
}

/// True when compiled with the rayon-backed implementation.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
