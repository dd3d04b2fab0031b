//! Chunk-level parallelism over independent element ranges.
//!
//! The worker count comes from `TENSORLITE_THREADS` (1 forces sequential
//! execution), falling back to the machine's available parallelism. Elementwise
//! results never depend on the partition. Reductions use a fixed chunk size that
//! is independent of the worker count, and partials are combined in chunk order,
//! so sums are bit-identical for every thread setting.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

pub const THREADS_ENV: &str = "TENSORLITE_THREADS";

/// Below this many elements kernels stay on the calling thread.
pub(crate) const PAR_THRESHOLD: usize = 1 << 15;

/// Fixed partial-sum granularity for reductions.
pub(crate) const REDUCE_CHUNK: usize = 1 << 14;

static OVERRIDE: AtomicUsize = AtomicUsize::new(0);

fn env_threads() -> usize {
    static ENV: OnceLock<usize> = OnceLock::new();
    *ENV.get_or_init(|| {
        let available = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        match std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            Some(n) if n >= 1 => n.min(available.max(1)),
            _ => available,
        }
    })
}

/// Number of worker threads kernels may use.
pub fn thread_limit() -> usize {
    if cfg!(target_arch = "wasm32") {
        return 1;
    }
    match OVERRIDE.load(Ordering::Relaxed) {
        0 => env_threads(),
        n => n,
    }
}

/// Override the worker count for this process; `None` restores the environment default.
pub fn set_thread_limit(limit: Option<usize>) {
    let stored = match limit {
        Some(n) => n.max(1),
        None => 0,
    };
    OVERRIDE.store(stored, Ordering::Relaxed);
}

/// Fill `out` by calling `f(start, slice)` on disjoint contiguous pieces.
pub(crate) fn fill_chunks<F>(out: &mut [f32], f: F)
where
    F: Fn(usize, &mut [f32]) + Sync,
{
    let threads = thread_limit();
    if threads <= 1 || out.len() < PAR_THRESHOLD {
        f(0, out);
        return;
    }
    let piece = out.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (i, chunk) in out.chunks_mut(piece).enumerate() {
            let f = &f;
            scope.spawn(move || f(i * piece, chunk));
        }
    });
}

/// Call `f(block_index, block)` for each `block_len`-sized block of `out`,
/// spreading whole blocks over threads when `work` (an element-operation
/// estimate) is large enough.
pub(crate) fn for_each_block<F>(out: &mut [f32], block_len: usize, work: usize, f: F)
where
    F: Fn(usize, &mut [f32]) + Sync,
{
    if block_len == 0 {
        return;
    }
    let n_blocks = out.len() / block_len;
    let threads = thread_limit().min(n_blocks);
    if threads <= 1 || work < PAR_THRESHOLD {
        for (i, block) in out.chunks_mut(block_len).enumerate() {
            f(i, block);
        }
        return;
    }
    let per = n_blocks.div_ceil(threads);
    std::thread::scope(|scope| {
        for (t, group) in out.chunks_mut(per * block_len).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (j, block) in group.chunks_mut(block_len).enumerate() {
                    f(t * per + j, block);
                }
            });
        }
    });
}

/// Evaluate `f` on each fixed-size chunk of `0..len` and return the partials in chunk order.
pub(crate) fn chunk_partials<T, F>(len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send + Default + Clone,
    F: Fn(Range<usize>) -> T + Sync,
{
    let n_chunks = len.div_ceil(chunk);
    let range = |c: usize| c * chunk..((c + 1) * chunk).min(len);
    let threads = thread_limit().min(n_chunks);
    if threads <= 1 || len < PAR_THRESHOLD {
        return (0..n_chunks).map(|c| f(range(c))).collect();
    }
    let mut partials = vec![T::default(); n_chunks];
    let per = n_chunks.div_ceil(threads);
    std::thread::scope(|scope| {
        for (t, slots) in partials.chunks_mut(per).enumerate() {
            let f = &f;
            let range = &range;
            scope.spawn(move || {
                for (j, slot) in slots.iter_mut().enumerate() {
                    *slot = f(range(t * per + j));
                }
            });
        }
    });
    partials
}
