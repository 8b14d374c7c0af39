//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in input order, so a run produces identical
//! output whether it executes on the rayon pool or on the calling thread.
//! Without the `parallel` feature, [`Parallelism::Parallel`] silently runs
//! sequentially.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Sizes the global worker pool; `0` keeps the default. Must run before any
/// parallel work. A no-op without the `parallel` feature.
pub fn configure_threads(threads: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        return rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string());
    }
    let _ = threads;
    Ok(())
}

/// Maps `f` over `0..len`, collecting results in index order.
pub fn map_range<T, F>(par: Parallelism, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..len).map(f).collect()
}

/// Maps `f` over a slice, collecting results in input order.
pub fn map_slice<S, T, F>(par: Parallelism, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = par;
    items.iter().map(f).collect()
}

/// Fallible variant of [`map_range`]; the first error by index wins.
pub fn try_map_range<T, E, F>(par: Parallelism, len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_range(par, len, f).into_iter().collect()
}
