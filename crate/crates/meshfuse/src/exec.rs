//! Order-preserving map helpers backing the crate's data parallelism.
//!
//! With the `parallel` feature (default), [`ordered_map`] fans work out on
//! the rayon pool; without it, it degrades to a plain sequential map.
//! [`ordered_map_seq`] is always sequential and always available, so callers
//! and benches can compare both paths. The two must produce identical
//! output for any pure `f`; the crate's determinism guarantees rely on it.

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(not(feature = "parallel"))]
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sequential fallback with the same contract as [`ordered_map`].
pub fn ordered_map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
