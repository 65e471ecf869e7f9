//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the closures run on the current rayon pool;
//! without it, or with [`Execution::Sequential`], they run in order on the
//! calling thread. Each element is computed independently, so the results are
//! identical either way.

use crate::config::Execution;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum slice length worth splitting across threads.
#[cfg(feature = "parallel")]
const MIN_PAR_LEN: usize = 1024;

/// `out[j] = f(j)` for every index.
pub fn fill_indexed<F>(exec: Execution, out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel && out.len() >= MIN_PAR_LEN {
        out.par_iter_mut()
            .with_min_len(MIN_PAR_LEN / 4)
            .enumerate()
            .for_each(|(j, o)| *o = f(j));
        return;
    }
    let _ = exec;
    for (j, o) in out.iter_mut().enumerate() {
        *o = f(j);
    }
}

/// Apply `f` to every element together with its index.
pub fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel && items.len() >= MIN_PAR_LEN {
        items
            .par_iter_mut()
            .with_min_len(MIN_PAR_LEN / 4)
            .enumerate()
            .for_each(|(i, t)| f(i, t));
        return;
    }
    let _ = exec;
    for (i, t) in items.iter_mut().enumerate() {
        f(i, t);
    }
}

/// Map over a slice of independent jobs, preserving order.
pub fn map_collect<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel && items.len() > 1 {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
