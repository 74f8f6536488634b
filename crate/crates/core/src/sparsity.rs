//! Closed-form estimate of the number of active users from received power.
//!
//! With unit-norm spreading columns and symbol power 2, each slot carries
//! `E‖y‖² = 2S + Mσ² = 2S(τ + 1)/τ`, so `τ/(2(τ + 1)) ‖y‖²` is unbiased for `S`.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::metrics::normalized_error;
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::system::{
    complex_gaussian, db_to_linear, noise_variance, SpreadingMatrix, SystemConfig, QPSK,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityEstimate {
    pub s_hat: f64,
    pub per_slot: Vec<f64>,
}

impl SparsityEstimate {
    /// Nearest non-negative integer.
    pub fn rounded(&self) -> usize {
        Float::round(self.s_hat.max(0.0)) as usize
    }

    /// Rounded estimate clamped to `[1, users]`, as fed to a detector.
    pub fn for_detector(&self, users: usize) -> usize {
        self.rounded().clamp(1, users.max(1))
    }
}

/// `Ŝ = (1/J) Σ_j τ/(2(τ+1)) ‖y⁽ʲ⁾‖²`.
pub fn estimate_sparsity(y: &ComplexMatrix, tau: f64) -> Result<SparsityEstimate> {
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(alloc::format!("linear SNR must be positive, got {tau}")));
    }
    let factor = if tau.is_infinite() { 0.5 } else { tau / (2.0 * (tau + 1.0)) };
    let per_slot: Vec<f64> = (0..y.cols()).map(|j| factor * y.column_norm_sq(j)).collect();
    let s_hat = per_slot.iter().sum::<f64>() / per_slot.len().max(1) as f64;
    Ok(SparsityEstimate { s_hat, per_slot })
}

/// One point of an estimator sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorPoint {
    pub users: usize,
    pub subcarriers: usize,
    pub slots: usize,
    pub active: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub point: EstimatorPoint,
    pub trials: usize,
    pub mean_error: f64,
    pub mean_estimate: f64,
    pub std_estimate: f64,
}

/// Mean normalised error of the estimator at every grid point.
///
/// Only the columns of `H` belonging to active users affect `Y`, so only those
/// gains are drawn.
pub fn estimator_error_sweep(
    grid: &[EstimatorPoint],
    trials: usize,
    seed: u64,
) -> Result<Vec<EstimatorResult>> {
    grid.iter()
        .enumerate()
        .map(|(i, p)| run_point(p, trials, seed, i as u64))
        .collect()
}

fn run_point(p: &EstimatorPoint, trials: usize, seed: u64, index: u64) -> Result<EstimatorResult> {
    let cfg = SystemConfig {
        users: p.users,
        subcarriers: p.subcarriers,
        slots: p.slots,
        active: p.active,
        snr_db: p.snr_db,
        seed,
    };
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let tau = db_to_linear(p.snr_db);
    let sigma_sq = noise_variance(p.active, p.subcarriers, tau);
    let spreading = SpreadingMatrix::for_config(&cfg);
    let (mut err_sum, mut sum, mut sum_sq) = (0.0, 0.0, 0.0);
    let mut y = ComplexMatrix::zeros(p.subcarriers, p.slots);
    for t in 0..trials {
        let trial_seed = derive_seed(seed, index, t as u64);
        let mut data = stream_rng(trial_seed, Stream::Data);
        let mut chan = stream_rng(trial_seed, Stream::Channel);
        let mut noise = stream_rng(trial_seed, Stream::Noise);
        let support = rand::seq::index::sample(&mut data, p.users, p.active).into_vec();
        let columns: Vec<Vec<_>> = support
            .iter()
            .map(|&k| {
                (0..p.subcarriers)
                    .map(|m| complex_gaussian(&mut chan, 1.0) * spreading.get(m, k))
                    .collect()
            })
            .collect();
        for j in 0..p.slots {
            for m in 0..p.subcarriers {
                y.set(m, j, complex_gaussian(&mut noise, sigma_sq));
            }
            for col in &columns {
                let x = QPSK[rand::Rng::random_range(&mut data, 0..4)];
                for m in 0..p.subcarriers {
                    y.set(m, j, y.get(m, j) + col[m] * x);
                }
            }
        }
        let est = estimate_sparsity(&y, tau)?.s_hat;
        err_sum += normalized_error(p.active, est);
        sum += est;
        sum_sq += est * est;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 { (sum_sq - n * mean * mean) / (n - 1.0) } else { 0.0 };
    Ok(EstimatorResult {
        point: *p,
        trials,
        mean_error: err_sum / n,
        mean_estimate: mean,
        std_estimate: Float::sqrt(var.max(0.0)),
    })
}
