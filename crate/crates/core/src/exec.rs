//! Execution strategy for the data-parallel inner loops.
//!
//! Every batch helper preserves input order, so results are identical
//! between [`Execution::Sequential`] and [`Execution::Parallel`]. Without the
//! `parallel` feature the parallel variant falls back to a plain iterator.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread across the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Weighted sum `sum_i w[i] * f(i)`.
    pub fn weighted_sum<F>(self, weights: &[f64], f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.sum_range(weights.len(), |i| weights[i] * f(i))
    }

    /// `sum_{i < len} f(i)`, reduced in fixed-size chunks so the
    /// floating-point result does not depend on the execution mode.
    pub fn sum_range<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        const CHUNK: usize = 4096;
        let chunks = len.div_ceil(CHUNK);
        let partial = self.map_range(chunks, |c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        });
        partial.into_iter().sum()
    }
}
