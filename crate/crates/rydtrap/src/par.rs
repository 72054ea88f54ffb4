//! Worker pool handed to ensemble computations. Results come back in index
//! order, so the number of workers never changes them.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

#[derive(Debug, Default)]
pub struct WorkerPool {
    pool: Option<rayon::ThreadPool>,
}

impl WorkerPool {
    /// `workers` = 0 uses rayon's global pool.
    pub fn new(workers: usize) -> Self {
        if workers == 0 {
            return Self { pool: None };
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().ok();
        Self { pool }
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or_else(rayon::current_num_threads, |p| p.current_num_threads())
    }

    /// f(0), ..., f(n-1) evaluated in parallel, returned in order.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let run = || (0..n).into_par_iter().map(&f).collect();
        match &self.pool {
            Some(p) => p.install(run),
            None => run(),
        }
    }
}

/// Independent random stream for item `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn order_preserved_across_pool_sizes() {
        let f = |i: usize| stream(7, i as u64).gen::<u64>();
        let a = WorkerPool::new(1).map(50, f);
        let b = WorkerPool::new(3).map(50, f);
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
