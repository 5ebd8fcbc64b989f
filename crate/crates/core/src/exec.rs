//! Execution strategy for embarrassingly parallel checking work.
//!
//! Every operation indexes its work items `0..n` and returns results in
//! index order, so output never depends on scheduling. With the `parallel`
//! feature off, `Exec::Parallel` cannot be constructed and all work runs on
//! the calling thread.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Default)]
pub enum Exec {
    #[default]
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel(Arc<rayon::ThreadPool>),
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exec::Sequential => f.write_str("Sequential"),
            #[cfg(feature = "parallel")]
            Exec::Parallel(p) => write!(f, "Parallel({})", p.current_num_threads()),
        }
    }
}

impl Exec {
    /// `jobs = Some(1)` is sequential; `None` uses every available core.
    /// Without the `parallel` feature this is always sequential.
    pub fn with_jobs(jobs: Option<usize>) -> Exec {
        #[cfg(feature = "parallel")]
        {
            if jobs == Some(1) {
                return Exec::Sequential;
            }
            let mut b = rayon::ThreadPoolBuilder::new();
            if let Some(n) = jobs {
                b = b.num_threads(n);
            }
            match b.build() {
                Ok(pool) => Exec::Parallel(Arc::new(pool)),
                Err(_) => Exec::Sequential,
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = jobs;
            Exec::Sequential
        }
    }

    pub fn parallel() -> Exec {
        Exec::with_jobs(None)
    }

    pub fn is_parallel(&self) -> bool {
        !matches!(self, Exec::Sequential)
    }

    pub fn threads(&self) -> usize {
        match self {
            Exec::Sequential => 1,
            #[cfg(feature = "parallel")]
            Exec::Parallel(p) => p.current_num_threads(),
        }
    }

    /// `f(0), .., f(n-1)` in index order.
    pub fn map<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel(p) => p.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }

    /// The `Some` result with the smallest index.
    pub fn find_map_first<R, F>(&self, n: usize, f: F) -> Option<R>
    where
        R: Send,
        F: Fn(usize) -> Option<R> + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).find_map(f),
            #[cfg(feature = "parallel")]
            Exec::Parallel(p) => p.install(|| (0..n).into_par_iter().find_map_first(f)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_in_index_order() {
        for ex in [Exec::Sequential, Exec::with_jobs(Some(4))] {
            assert_eq!(
                ex.map(100, |i| i * i),
                (0..100).map(|i| i * i).collect::<Vec<_>>()
            );
            assert_eq!(
                ex.find_map_first(1000, |i| (i % 97 == 96).then_some(i)),
                Some(96)
            );
            assert_eq!(ex.find_map_first(10, |_| None::<usize>), None);
        }
    }

    #[test]
    fn one_job_is_sequential() {
        assert!(!Exec::with_jobs(Some(1)).is_parallel());
        assert_eq!(Exec::Sequential.threads(), 1);
    }
}
