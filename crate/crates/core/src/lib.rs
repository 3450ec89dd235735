//! Reference-free quality rating for AMR graphs.
//!
//! The crate is `no_std` (with `alloc`). It covers the whole numerical and
//! symbolic pipeline: PENMAN parsing and simplification, Smatch and the
//! fine-grained AMR metrics, token-grid projection, a small set of neural
//! kernels with exact gradients, the dual-branch convolutional rater, dataset
//! preparation, the ridge baseline and the evaluation statistics.
//!
//! File IO, checkpoints and the command line live in the `amrq` crate.

#![no_std]

extern crate alloc;

pub mod dataset;
pub mod dep;
pub mod exec;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod penman;
pub mod ridge;
pub mod stats;

mod hash;
mod rng;

pub use hash::fnv1a64;
pub use rng::{mix_seed, seeded_rng};

pub(crate) mod prelude {
    pub use alloc::borrow::ToOwned;
    pub use alloc::boxed::Box;
    pub use alloc::collections::{BTreeMap, BTreeSet};
    pub use alloc::format;
    pub use alloc::string::{String, ToString};
    pub use alloc::vec;
    pub use alloc::vec::Vec;
}
