//! Scheduling of independent work units.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How independent work units are scheduled. Both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Data-parallel over the current rayon pool; sequential when the
    /// `parallel` feature is off.
    #[default]
    Parallel,
    Sequential,
}

/// `f` applied to every index in `range`, results in index order.
pub(crate) fn map_range<T, F>(range: std::ops::Range<usize>, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => range.into_par_iter().map(f).collect(),
        _ => range.map(f).collect(),
    }
}
