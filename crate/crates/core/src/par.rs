//! Execution-mode switch between sequential loops and rayon data parallelism.
//!
//! Every numeric kernel in this crate accumulates in a fixed order per output
//! element, so switching modes (or changing the rayon thread count) never
//! changes a single output bit. The `parallel` feature removes the rayon
//! dependency entirely; [`Parallelism::Rayon`] only exists when it is enabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How replica loops and row-parallel kernels are driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    /// Plain sequential loops.
    Sequential,
    /// rayon work-stealing over replicas / row chunks.
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// Mode for a requested worker count (1 means sequential).
    pub fn from_threads(threads: usize) -> Self {
        if threads == 1 {
            Parallelism::Sequential
        } else {
            Parallelism::default()
        }
    }
}

/// Maps `0..count` through `f`, collecting results in index order.
pub fn map_indexed<T, F>(mode: Parallelism, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        Parallelism::Sequential => (0..count).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..count).into_par_iter().map(f).collect(),
    }
}

/// Runs `f` over disjoint mutable chunks of `data`, passing the chunk's
/// starting offset. Chunk boundaries never split the per-element accumulation
/// order, so the result is independent of the chunk size and thread count.
pub fn for_each_chunk_mut<T, F>(mode: Parallelism, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    debug_assert!(chunk > 0);
    match mode {
        Parallelism::Sequential => {
            for (ci, c) in data.chunks_mut(chunk).enumerate() {
                f(ci * chunk, c);
            }
        }
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(ci, c)| f(ci * chunk, c));
        }
    }
}
