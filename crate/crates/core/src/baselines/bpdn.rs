use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::select::top_indices;

use super::{oracle_ls, Recovery, RecoveryIssue, RecoverySettings};

/// Factor applied to the power-iteration estimate of `‖H‖²`. The estimate
/// approaches the true value from below, and the step must not exceed `1/L`.
const LIPSCHITZ_MARGIN: f64 = 1.01;

/// Output of the proximal-gradient solver before sparsification.
#[derive(Debug, Clone)]
pub struct BpdnSolution {
    pub x: ComplexMatrix,
    /// Objective at the starting point followed by one value per iteration.
    pub objective: Vec<f64>,
    pub converged: bool,
    /// Step-size constant actually used.
    pub lipschitz: f64,
}

/// Largest eigenvalue of `HᴴH` by power iteration.
pub fn spectral_norm_sq(h: &ComplexMatrix) -> f64 {
    let a = h.as_nalgebra();
    let k = a.ncols();
    if k == 0 || h.frobenius_norm_sq() == 0.0 {
        return 0.0;
    }
    let mut v = DMatrix::from_element(k, 1, Complex64::new(1.0 / Float::sqrt(k as f64), 0.0));
    let mut estimate = 0.0;
    for _ in 0..2000 {
        let w = a.adjoint() * (a * &v);
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        let next = (a * &v).norm_squared();
        v = w / Complex64::new(norm, 0.0);
        let done = (next - estimate).abs() <= 1e-13 * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `σ √(2 ln K) ‖H‖₂`.
pub fn default_bpdn_lambda(h: &ComplexMatrix, sigma_sq: f64, users: usize) -> f64 {
    let log_k = Float::ln((users.max(2)) as f64);
    Float::sqrt(sigma_sq) * Float::sqrt(2.0 * log_k) * Float::sqrt(spectral_norm_sq(h))
}

/// `½‖Y − HX‖² + λ Σ_k ‖row_k(X)‖₂`.
pub fn bpdn_objective(y: &ComplexMatrix, h: &ComplexMatrix, x: &ComplexMatrix, lambda: f64) -> f64 {
    let resid = h.as_nalgebra() * x.as_nalgebra() - y.as_nalgebra();
    let penalty: f64 = (0..x.rows()).map(|k| Float::sqrt(x.row_norm_sq(k))).sum();
    0.5 * resid.norm_squared() + lambda * penalty
}

/// Monotone (non-accelerated) proximal gradient for the row-sparse problem.
pub fn bpdn_solve(
    y: &ComplexMatrix,
    h: &ComplexMatrix,
    lambda: f64,
    max_iters: usize,
    tol: f64,
) -> Result<BpdnSolution> {
    if y.rows() != h.rows() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "Y has {} rows, H has {}",
            y.rows(),
            h.rows()
        )));
    }
    let lipschitz = spectral_norm_sq(h) * LIPSCHITZ_MARGIN;
    let users = h.cols();
    let slots = y.cols();
    let mut x = DMatrix::<Complex64>::zeros(users, slots);
    let mut objective = vec![bpdn_objective(y, h, &ComplexMatrix::from_nalgebra(x.clone()), lambda)];
    if lipschitz == 0.0 {
        return Ok(BpdnSolution { x: ComplexMatrix::from_nalgebra(x), objective, converged: true, lipschitz });
    }
    let step = 1.0 / lipschitz;
    let threshold = lambda * step;
    let ha = h.as_nalgebra();
    let hh = ha.adjoint();
    let hy = &hh * y.as_nalgebra();
    let gram = &hh * ha;
    let mut converged = false;

    for _ in 0..max_iters {
        // Gradient of the smooth part: HᴴH X − HᴴY.
        let grad = &gram * &x - &hy;
        let mut next = &x - grad * Complex64::new(step, 0.0);
        for k in 0..users {
            let norm = Float::sqrt(next.row(k).norm_squared());
            let shrink = if norm > threshold { 1.0 - threshold / norm } else { 0.0 };
            next.row_mut(k).scale_mut(shrink);
        }
        let change = (&next - &x).norm();
        let scale = next.norm().max(f64::MIN_POSITIVE);
        x = next;
        let next_matrix = ComplexMatrix::from_nalgebra(x.clone());
        objective.push(bpdn_objective(y, h, &next_matrix, lambda));
        if change <= tol * scale {
            converged = true;
            break;
        }
    }
    Ok(BpdnSolution { x: ComplexMatrix::from_nalgebra(x), objective, converged, lipschitz })
}

/// Solves the row-sparse problem, keeps the `S` nonzero rows of largest norm
/// and refits them by least squares.
pub fn bpdn_recover(y: &ComplexMatrix, h: &ComplexMatrix, settings: &RecoverySettings) -> Result<Recovery> {
    settings.validate(h.cols())?;
    let sol = bpdn_solve(y, h, settings.bpdn_lambda, settings.max_iters, settings.bpdn_tol)?;
    let norms: Vec<f64> = (0..sol.x.rows()).map(|k| sol.x.row_norm_sq(k)).collect();
    let nonzero = norms.iter().filter(|n| **n > 0.0).count();
    let support = top_indices(&norms, settings.sparsity.min(nonzero));
    let frame = oracle_ls(y, h, &support)?;
    let issue = (!sol.converged).then_some(RecoveryIssue::NonConvergence);
    Ok(Recovery { frame, issue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Frame, Scenario, SpreadingMatrix, SystemConfig, QPSK};

    fn scenario(seed: u64, snr_db: f64) -> Scenario {
        let cfg = SystemConfig { users: 30, subcarriers: 15, slots: 4, active: 4, snr_db, seed: 1 };
        Scenario::generate(&cfg, &SpreadingMatrix::for_config(&cfg), seed).unwrap()
    }

    #[test]
    fn power_iteration_matches_svd() {
        let sc = scenario(0, 5.0);
        let h = sc.channel.effective();
        let sv = crate::linalg::singular_values(h)[0];
        let est = spectral_norm_sq(h);
        assert!((est - sv * sv).abs() <= 1e-6 * sv * sv, "{est} vs {}", sv * sv);
    }

    #[test]
    fn identity_measurement_without_penalty_is_exact() {
        let truth = Frame::from_symbols(ComplexMatrix::from_fn(6, 3, |k, j| {
            if k % 2 == 0 { QPSK[(k + j) % 4] } else { Complex64::new(0.0, 0.0) }
        }));
        let h = ComplexMatrix::identity(6);
        let y = truth.symbols().clone();
        let mut s = RecoverySettings::new(3);
        s.bpdn_lambda = 0.0;
        let r = bpdn_recover(&y, &h, &s).unwrap();
        assert_eq!(r.frame, truth);
        assert_eq!(r.issue, None);
    }

    #[test]
    fn lambda_above_kill_threshold_gives_zero() {
        let sc = scenario(1, 10.0);
        let h = sc.channel.effective();
        let y = &sc.received.y;
        // X = 0 is optimal iff every row of HᴴY has norm at most lambda.
        let hy = h.hermitian().matmul(y).unwrap();
        let lambda_max = (0..h.cols()).map(|k| hy.row_norm_sq(k).sqrt()).fold(0.0, f64::max);
        let sol = bpdn_solve(y, h, lambda_max * 1.0001, 500, 1e-10).unwrap();
        assert_eq!(sol.x.frobenius_norm_sq(), 0.0);
        let mut s = RecoverySettings::new(4);
        s.bpdn_lambda = lambda_max * 1.0001;
        assert_eq!(bpdn_recover(y, h, &s).unwrap().frame, Frame::zeros(30, 4));

        let sol = bpdn_solve(y, h, lambda_max * 0.9, 500, 1e-10).unwrap();
        assert!(sol.x.frobenius_norm_sq() > 0.0);
    }

    #[test]
    fn objective_is_monotone() {
        for seed in 0..20 {
            let sc = scenario(seed, 5.0);
            let h = sc.channel.effective();
            let lambda = default_bpdn_lambda(h, sc.received.sigma_sq, 30);
            let sol = bpdn_solve(&sc.received.y, h, lambda, 300, 1e-12).unwrap();
            for w in sol.objective.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn exhausted_budget_is_flagged() {
        let sc = scenario(2, 5.0);
        let mut s = RecoverySettings::new(4);
        s.max_iters = 2;
        s.bpdn_tol = 1e-15;
        let r = bpdn_recover(&sc.received.y, sc.channel.effective(), &s).unwrap();
        assert_eq!(r.issue, Some(RecoveryIssue::NonConvergence));
        assert!(r.frame.sparsity() <= 4);
    }
}
