//! Isometry penalty on pairwise distances of signals under `H`.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

use super::latent::{matrix_to_output, Measurement};

/// `(‖H(a − b)‖ − ‖a − b‖)²` for generator-layout signals, with its gradient
/// in `a` (the gradient in `b` is its negative).
pub(crate) fn pair_term(meas: &Measurement, a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n2 = Float::sqrt(d.iter().map(|v| v * v).sum::<f64>());
    let (re, im) = meas.apply(&d);
    let n1 = Float::sqrt(re.iter().chain(&im).map(|v| v * v).sum::<f64>());
    let diff = n1 - n2;
    let mut grad = alloc::vec![0.0; d.len()];
    if n1 > 0.0 {
        let hh = meas.adjoint(&re, &im);
        for (g, v) in grad.iter_mut().zip(&hh) {
            *g += 2.0 * diff * v / n1;
        }
    }
    if n2 > 0.0 {
        for (g, v) in grad.iter_mut().zip(&d) {
            *g -= 2.0 * diff * v / n2;
        }
    }
    (diff * diff, grad)
}

/// Loss over the pairs (true, before), (true, after), (before, after) and
/// its gradients with respect to `before` and `after`.
pub(crate) fn rip_terms(
    meas: &Measurement,
    truth: &[f64],
    before: &[f64],
    after: &[f64],
) -> (f64, Vec<f64>, Vec<f64>) {
    let (l1, g1) = pair_term(meas, truth, before);
    let (l2, g2) = pair_term(meas, truth, after);
    let (l3, g3) = pair_term(meas, before, after);
    let third = 1.0 / 3.0;
    let d_before = g1.iter().zip(&g3).map(|(a, c)| third * (c - a)).collect();
    let d_after = g2.iter().zip(&g3).map(|(b, c)| -third * (b + c)).collect();
    ((l1 + l2 + l3) * third, d_before, d_after)
}

/// Mean of `(‖H X₁ − H X₂‖_F − ‖X₁ − X₂‖_F)²` over the given pairs.
pub fn rip_loss(h: &ComplexMatrix, pairs: &[(ComplexMatrix, ComplexMatrix)]) -> Result<f64> {
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (a, b) in pairs {
        if a.shape() != b.shape() || a.rows() != h.cols() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "pair {:?}/{:?} does not fit H with {} columns",
                a.shape(),
                b.shape(),
                h.cols()
            )));
        }
        let meas = Measurement::new(&ComplexMatrix::zeros(h.rows(), a.cols()), h)?;
        total += pair_term(&meas, &matrix_to_output(a), &matrix_to_output(b)).0;
    }
    Ok(total / pairs.len() as f64)
}
