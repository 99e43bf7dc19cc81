//! Order-preserving parallel map over sample indices.
//!
//! Every sample derives its own generator from `(seed, N, index)`, so the
//! collected results do not depend on scheduling or on the pool size.

use rayon::prelude::*;

use crate::error::{LabError, Result};

/// `f(0), …, f(count − 1)` evaluated on the current rayon pool, in index order.
pub fn par_samples<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Worker pool capped at `threads` (0 means one per logical core).
pub fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::ThreadPool(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_index_order_for_any_pool_size() {
        let seq: Vec<u64> = (0..100).map(|k| k * k).collect();
        for threads in [1, 3] {
            let out = pool(threads).unwrap().install(|| par_samples(100, |k| Ok(k * k))).unwrap();
            assert_eq!(out, seq);
        }
    }

    #[test]
    fn first_error_is_reported() {
        let r: Result<Vec<u64>> = par_samples(10, |k| {
            if k == 5 {
                Err(LabError::EmptyDomain("x".into()))
            } else {
                Ok(k)
            }
        });
        assert!(r.is_err());
    }
}
