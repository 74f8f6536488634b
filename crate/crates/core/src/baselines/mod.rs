//! Classical recovery of `Y = H X + N`: oracle least squares, greedy
//! simultaneous OMP and row-sparse basis pursuit denoising.
//!
//! Every detector ends the same way the generative detector does: exactly the
//! chosen rows are kept and each entry is mapped to the nearest QPSK point.

mod bpdn;
mod omp;

pub use bpdn::{bpdn_objective, bpdn_recover, bpdn_solve, default_bpdn_lambda, spectral_norm_sq, BpdnSolution};
pub use omp::{omp_per_slot, somp_detect};

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, ComplexMatrix};
use crate::select::frame_from_support;
use crate::system::Frame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoverySettings {
    /// Number of active users `S` the detector returns.
    pub sparsity: usize,
    pub max_iters: usize,
    /// Row-group penalty weight; see [`default_bpdn_lambda`].
    pub bpdn_lambda: f64,
    /// Relative iterate change that counts as converged.
    pub bpdn_tol: f64,
}

impl RecoverySettings {
    pub fn new(sparsity: usize) -> Self {
        Self { sparsity, max_iters: 2000, bpdn_lambda: 0.0, bpdn_tol: 1e-8 }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        if self.sparsity > users {
            return Err(Error::InvalidConfig(format!(
                "sparsity {} exceeds user count {users}",
                self.sparsity
            )));
        }
        if !(self.bpdn_lambda >= 0.0) || !(self.bpdn_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need lambda >= 0 and tol > 0, got {} and {}",
                self.bpdn_lambda, self.bpdn_tol
            )));
        }
        Ok(())
    }
}

/// Something went wrong but a usable frame was still produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryIssue {
    /// Greedy selection hit a degenerate column set and stopped early.
    RankDeficient,
    /// The iteration budget ran out before the tolerance was met.
    NonConvergence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub frame: Frame,
    pub issue: Option<RecoveryIssue>,
}

/// Least squares on the known support, then nearest-symbol mapping.
pub fn oracle_ls(y: &ComplexMatrix, h: &ComplexMatrix, support: &[usize]) -> Result<Frame> {
    if y.rows() != h.rows() {
        return Err(Error::ShapeMismatch(format!(
            "Y has {} rows, H has {}",
            y.rows(),
            h.rows()
        )));
    }
    if support.iter().any(|&k| k >= h.cols()) {
        return Err(Error::ShapeMismatch(format!("support index beyond {} users", h.cols())));
    }
    let coeffs = least_squares(&h.select_columns(support), y)?;
    Ok(frame_from_support(h.cols(), support, &coeffs))
}
