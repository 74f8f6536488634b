//! Grant-free NOMA uplink simulation and joint activity/data detection.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, experiment sweeps
//! and the command-line tool live in the `genmud` crate.

#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod error;
pub mod genmud;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod select;
pub mod sparsity;
pub mod system;

pub use error::{Error, Result};
pub use num_complex;
