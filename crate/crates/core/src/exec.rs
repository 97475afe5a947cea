//! Index-parallel map abstraction.

use alloc::vec::Vec;

/// Evaluates `f(0..n)` and returns the results in index order.
///
/// Implementations may run the closures concurrently, but the returned vector
/// must always be ordered by index. Every reduction in this crate happens
/// inside a single closure call or after collection, so results do not depend
/// on the implementation or its worker count.
pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
