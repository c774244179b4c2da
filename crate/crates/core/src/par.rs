//! Data-parallel maps with a sequential fallback.
//!
//! Only order-preserving maps live here. Reductions are always done by the
//! caller over the collected vector, which keeps floating point sums
//! independent of the scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, in parallel when the `parallel` feature is on.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// `items.iter().map(f).collect()`, in parallel when the `parallel` feature is on.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Stable sort by key. Stability makes the result unique, hence deterministic.
pub fn stable_sort_by_key<T, K, F>(items: &mut [T], key: F)
where
    T: Send,
    K: Ord,
    F: Fn(&T) -> K + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_sort_by_key(key)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.sort_by_key(key)
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
