//! Sequential / rayon execution switch.
//!
//! Every parallel loop in the crate maps an indexed slice to an output vector
//! whose order matches the input, so results never depend on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    /// `jobs == 1` runs sequentially; otherwise the global rayon pool is sized
    /// to `jobs` (0 = one per logical CPU) on first use.
    pub fn with_jobs(jobs: usize) -> Execution {
        if jobs == 1 {
            return Execution::Sequential;
        }
        #[cfg(feature = "parallel")]
        {
            if jobs > 1 {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
                    log::debug!("thread pool already configured: {e}");
                }
            }
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }

    /// Map `f` over `items`, preserving input order.
    pub fn map<'a, T, U, F>(self, items: &'a [T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(usize, &'a T) -> U + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        }
    }

    /// Map a fallible `f`, returning the first error in input order.
    pub fn try_map<'a, T, U, E, F>(self, items: &'a [T], f: F) -> Result<Vec<U>, E>
    where
        T: Sync,
        U: Send,
        E: Send,
        F: Fn(usize, &'a T) -> Result<U, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}
