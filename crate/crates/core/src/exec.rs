//! Data-parallel sample sweeps with a sequential fallback.
//!
//! Residual checks are max-reductions over independent sample items. With the
//! `parallel` feature (default) items run on the rayon pool; without it the
//! same code runs sequentially. Results are collected in item order and
//! reduced sequentially, so the argmax witness is deterministic either way.

/// Map `f` over the items and return the results in order.
#[cfg(feature = "parallel")]
pub fn map_items<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_items<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Always-sequential variant, kept for benchmarking against the parallel path.
pub fn map_items_seq<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}
