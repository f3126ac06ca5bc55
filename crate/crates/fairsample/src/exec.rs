use fairsample_core::experiments::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Runs jobs on a dedicated pool of worker threads.
pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(Self { pool: ThreadPoolBuilder::new().num_threads(threads.max(1)).build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        // indexed collect keeps job order whatever the schedule
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
