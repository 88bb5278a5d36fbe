//! Parallel map over work items, with a sequential fallback.
//!
//! With the `parallel` feature (the default) the map runs on the rayon
//! pool of the calling context; without it the same closure runs on a
//! plain iterator. Output order always matches input order, and per-item
//! seeds are derived from item indices, so both paths produce identical
//! bytes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}
