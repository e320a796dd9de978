//! Order-preserving map used for per-set and per-client work.
//!
//! With the `parallel` feature the map runs on the rayon pool; without it, or
//! with [`Execution::Sequential`], it is a plain iterator. Outputs always come
//! back in input order, so downstream reductions see the same sequence either way.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work actually fans out, i.e. `Parallel` and the feature is compiled in.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn map_ordered<T, R, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.into_par_iter().map(f).collect();
    }
    let _ = exec;
    items.into_iter().map(f).collect()
}

pub fn map_ordered_ref<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Caps the global pool. Returns `false` when the pool was already initialised
/// or the crate was built without `parallel`.
pub fn init_thread_pool(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

/// Reads `HIERADMM_THREADS`; `None` when unset or not a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("HIERADMM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = map_ordered(Execution::Sequential, items.clone(), |x| x * x);
        let par = map_ordered(Execution::Parallel, items.clone(), |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(
            map_ordered_ref(Execution::Parallel, &items, |x| x + 1)[999],
            1000
        );
    }
}
