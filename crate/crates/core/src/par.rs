//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (default) work runs on the rayon pool;
//! without it, or with [`Exec::Sequential`], it runs in order on the calling
//! thread. Results are always returned in index order, so both paths give
//! identical output.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
    #[cfg(not(feature = "parallel"))]
    #[default]
    Fallback,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self == Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }
}

/// `(0..n).map(f)` under the default execution mode.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_range_with(Exec::default(), n, f)
}

pub fn map_range_with<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}
