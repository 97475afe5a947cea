use owcsim_core::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Runs indexed work on a dedicated rayon pool.
pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    /// `workers = 0` lets rayon pick the number of threads.
    pub fn new(workers: usize) -> Self {
        let pool = ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool starts");
        Rayon { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
