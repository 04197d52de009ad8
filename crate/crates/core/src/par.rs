//! Data-parallel helpers with a sequential fallback.
//!
//! Each output slot is written by exactly one closure call, so results never
//! depend on how work is split across threads.

/// Fill `out[i] = f(i)`.
pub(crate) fn fill<T, F>(out: &mut [T], parallel: bool, f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && out.len() >= 512 {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, slot)| *slot = f(i));
        return;
    }
    let _ = parallel;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = f(i);
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel; order is preserved.
pub(crate) fn map_range<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && n > 1 {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

/// Run `f` on a pool with `workers` threads (0 = rayon default).
///
/// Without the `parallel` feature this just calls `f`.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
