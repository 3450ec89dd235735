//! Pluggable corpus-level parallelism and timing.
//!
//! The core only ships a sequential executor; a threaded one lives with the
//! command-line crate. Callers must not depend on evaluation order, only on
//! the order of the returned vector, which always follows the input.

use crate::prelude::*;

pub trait Executor: Sync {
    /// Applies `f` to every item and returns the results in input order.
    fn map<I, R, F>(&self, items: &[I], f: F) -> Vec<R>
    where
        I: Sync,
        R: Send,
        F: Fn(usize, &I) -> R + Sync;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<I, R, F>(&self, items: &[I], f: F) -> Vec<R>
    where
        I: Sync,
        R: Send,
        F: Fn(usize, &I) -> R + Sync,
    {
        items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
    }
}

/// Monotonic seconds, for reporting only.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}
