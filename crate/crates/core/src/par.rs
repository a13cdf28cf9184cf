//! Data-parallel map/reduce over an index range. With the `parallel`
//! feature this runs on the current rayon pool unless `sequential` is set;
//! without it, everything runs on the calling thread.
//!
//! Callers must pass an associative, commutative `reduce` so that results do
//! not depend on how the range was split.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_reduce<T, M, R>(
    len: usize,
    sequential: bool,
    identity: impl Fn() -> T + Sync + Send,
    map: M,
    reduce: R,
) -> T
where
    T: Send,
    M: Fn(usize) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !sequential {
        return (0..len).into_par_iter().map(map).reduce(identity, reduce);
    }
    let _ = sequential;
    (0..len).map(map).fold(identity(), reduce)
}

/// Order-preserving parallel map.
pub(crate) fn map_collect<T, M>(len: usize, sequential: bool, map: M) -> Vec<T>
where
    T: Send,
    M: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if !sequential {
        return (0..len).into_par_iter().map(map).collect();
    }
    let _ = sequential;
    (0..len).map(map).collect()
}
