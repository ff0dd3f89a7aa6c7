//! Batch execution helpers: rayon-backed when the `parallel` feature is on,
//! plain iteration otherwise. Results are collected in input order, so the
//! output is identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, in parallel when built with the `parallel` feature.
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
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

/// Sequential reference path; also what `map` degrades to without the feature.
pub(crate) fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Run `job` inside a thread pool capped at `threads` workers (used to honor
/// FRACLAB_THREADS for sweeps). Without the `parallel` feature the cap is
/// moot and the job just runs.
#[cfg(feature = "parallel")]
pub(crate) fn with_thread_cap<R: Send>(threads: Option<usize>, job: impl FnOnce() -> R + Send) -> R {
    match threads.filter(|&k| k > 0) {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(job),
            Err(_) => job(),
        },
        None => job(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn with_thread_cap<R>(_threads: Option<usize>, job: impl FnOnce() -> R) -> R {
    job()
}
