//! Data-parallel primitives with a sequential fallback.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run on the calling thread. Reductions always split the input into
//! fixed-size chunks and merge the partial results in chunk order, so the
//! floating-point result is identical for every thread count and for both
//! builds.

/// Chunk length used by every ordered reduction in the crate.
pub const REDUCE_CHUNK: usize = 256;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, evaluated in parallel when enabled.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Applies `f(chunk_index, chunk)` to consecutive mutable chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Ordered chunked reduction over `0..n`: `fold` produces one partial per
/// chunk of [`REDUCE_CHUNK`] indices, `merge` combines partials left to right.
pub fn reduce_range<A, Fold, Merge>(n: usize, fold: Fold, mut merge: Merge) -> Option<A>
where
    A: Send,
    Fold: Fn(std::ops::Range<usize>) -> A + Sync + Send,
    Merge: FnMut(A, A) -> A,
{
    let n_chunks = n.div_ceil(REDUCE_CHUNK);
    let partials = map_range(n_chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        fold(lo..(lo + REDUCE_CHUNK).min(n))
    });
    partials.into_iter().reduce(&mut merge)
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    reduce_range(n, |r| r.map(&f).sum::<f64>(), |a, b| a + b).unwrap_or(0.0)
}

/// Number of worker threads available to the parallel primitives.
pub fn current_num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
