use alloc::vec::Vec;

/// Evaluates `f` for every replicate index `0..n`, in index order.
#[cfg(feature = "std")]
pub(crate) fn map_replicates<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().with_min_len(16).map(|r| f(r as u64)).collect()
}

#[cfg(not(feature = "std"))]
pub(crate) fn map_replicates<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n as u64).map(f).collect()
}
