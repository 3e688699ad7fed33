use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rng::child_seed;

/// Samples per chunk unless overridden.
pub const DEFAULT_CHUNK_SIZE: u64 = 4096;

/// Splits a sample budget into fixed-size chunks, each driven by its own
/// child seed, so results do not depend on the thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    seed: u64,
    samples: u64,
    chunk_size: u64,
    threads: usize,
}

impl MonteCarlo {
    pub fn new(seed: u64, samples: u64) -> Result<Self> {
        if samples == 0 {
            return invalid("sample count must be positive");
        }
        Ok(Self { seed, samples, chunk_size: DEFAULT_CHUNK_SIZE, threads: 1 })
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn with_chunk_size(mut self, chunk_size: u64) -> Result<Self> {
        if chunk_size == 0 {
            return invalid("chunk size must be positive");
        }
        self.chunk_size = chunk_size;
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn chunk_count(&self) -> u64 {
        self.samples.div_ceil(self.chunk_size)
    }

    /// `(child seed, sample count)` for every chunk, in order.
    pub fn chunks(&self) -> Vec<(u64, u64)> {
        (0..self.chunk_count())
            .map(|c| {
                let start = c * self.chunk_size;
                (child_seed(self.seed, c), self.chunk_size.min(self.samples - start))
            })
            .collect()
    }

    /// Runs `f(child_seed, count)` for every chunk on a pool of
    /// `threads` workers; results come back in chunk order.
    pub fn map_chunks<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, u64) -> Result<T> + Sync + Send,
    {
        let chunks = self.chunks();
        if self.threads == 1 {
            return chunks.into_iter().map(|(s, c)| f(s, c)).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| crate::Error::ResourceLimit(format!("cannot start worker pool: {e}")))?;
        pool.install(|| chunks.into_par_iter().map(|(s, c)| f(s, c)).collect())
    }
}
