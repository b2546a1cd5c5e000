// SPDX-License-Identifier: Apache-2.0

//! Work distribution over independent items (queries, points, graph nodes).
//!
//! With the `parallel` feature an [`Executor`] fans work out over a rayon
//! pool; without it, or with a single worker, everything runs on the calling
//! thread. Results are always collected in item order, so output never
//! depends on the worker count.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone)]
pub struct Executor {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("workers", &self.workers).finish()
    }
}

impl Default for Executor {
    /// Uses the global rayon pool when parallelism is compiled in.
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Executor {
                workers: rayon::current_num_threads(),
                pool: None,
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Executor::sequential()
        }
    }
}

impl Executor {
    pub fn sequential() -> Self {
        Executor {
            workers: 1,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    /// An executor with a dedicated pool of `workers` threads. `0` means the
    /// global pool; `1` means sequential.
    pub fn with_workers(workers: usize) -> Self {
        match workers {
            0 => Executor::default(),
            1 => Executor::sequential(),
            #[cfg(feature = "parallel")]
            n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => Executor {
                    workers: n,
                    pool: Some(Arc::new(pool)),
                },
                Err(err) => {
                    log::warn!("falling back to global pool: {err}");
                    Executor::default()
                }
            },
            #[cfg(not(feature = "parallel"))]
            _ => Executor::sequential(),
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        self.workers > 1
    }

    /// Applies `f` to `0..n` and returns the results in index order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            let run = || (0..n).into_par_iter().map(&f).collect();
            return match &self.pool {
                Some(pool) => pool.install(run),
                None => run(),
            };
        }
        (0..n).map(f).collect()
    }

    /// Like [`Executor::map`] but short-circuits on the first error by index.
    pub fn try_map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}
