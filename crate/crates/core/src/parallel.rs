//! Order-preserving data-parallel maps.
//!
//! Every helper here collects results in index order, so reductions done
//! afterwards see the same sequence regardless of how work was scheduled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for replicate and batch loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential execution when the `parallel` feature is off.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// `(0..n).map(f).collect()`, spread over the rayon pool when allowed.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Like [`map_indexed`] but short-circuits on the first error (by index order
/// of the collected results).
pub fn try_map_indexed<T, E, F>(exec: Exec, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(exec, n, f).into_iter().collect()
}

/// Fill `out[i] = f(i)` in chunks of `chunk` elements.
pub fn fill_chunked<T, F>(exec: Exec, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(c, slice)| f(c * chunk, slice));
            return;
        }
    }
    let _ = exec;
    for (c, slice) in out.chunks_mut(chunk).enumerate() {
        f(c * chunk, slice);
    }
}

/// Run `op` on a dedicated pool with `workers` threads. Without the
/// `parallel` feature, or with `workers == 0`, runs `op` directly.
pub fn with_workers<R, F>(workers: usize, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(op);
            }
        }
    }
    let _ = workers;
    op()
}

pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
