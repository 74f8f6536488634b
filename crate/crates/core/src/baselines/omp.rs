use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, ComplexMatrix};
use crate::select::frame_from_support;
use crate::system::Frame;

use super::{Recovery, RecoveryIssue, RecoverySettings};

/// Residual energy, relative to `‖Y‖²`, at which there is nothing left to explain.
const RESIDUAL_FLOOR: f64 = 1e-24;

/// Simultaneous OMP over all slots of the frame.
///
/// Each round picks the unselected column with the largest
/// `Σ_j |⟨h_k, r_j⟩|² / ‖h_k‖²`, then refits all selected columns jointly.
pub fn somp_detect(y: &ComplexMatrix, h: &ComplexMatrix, settings: &RecoverySettings) -> Result<Recovery> {
    settings.validate(h.cols())?;
    let (support, coeffs, issue) = simultaneous_pursuit(y, h, settings.sparsity)?;
    Ok(Recovery { frame: frame_from_support(h.cols(), &support, &coeffs), issue })
}

/// Independent single-slot OMP on every column of `Y`. The result may not
/// share a support across slots.
pub fn omp_per_slot(y: &ComplexMatrix, h: &ComplexMatrix, settings: &RecoverySettings) -> Result<Recovery> {
    settings.validate(h.cols())?;
    let users = h.cols();
    let mut symbols = ComplexMatrix::zeros(users, y.cols());
    let mut issue = None;
    for j in 0..y.cols() {
        let column = ComplexMatrix::from_fn(y.rows(), 1, |m, _| y.get(m, j));
        let (support, coeffs, slot_issue) = simultaneous_pursuit(&column, h, settings.sparsity)?;
        issue = issue.or(slot_issue);
        let slot = frame_from_support(users, &support, &coeffs);
        for &k in &support {
            symbols.set(k, j, slot.symbols().get(k, 0));
        }
    }
    Ok(Recovery { frame: Frame::from_symbols(symbols), issue })
}

fn simultaneous_pursuit(
    y: &ComplexMatrix,
    h: &ComplexMatrix,
    sparsity: usize,
) -> Result<(Vec<usize>, ComplexMatrix, Option<RecoveryIssue>)> {
    if y.rows() != h.rows() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "Y has {} rows, H has {}",
            y.rows(),
            h.rows()
        )));
    }
    let users = h.cols();
    let column_norms: Vec<f64> = (0..users).map(|k| h.column_norm_sq(k)).collect();
    let hh = h.hermitian();
    let y_energy = y.frobenius_norm_sq();

    let mut selected: Vec<usize> = Vec::with_capacity(sparsity);
    let mut coeffs = ComplexMatrix::zeros(0, y.cols());
    let mut residual = y.clone();
    let mut issue = None;

    while selected.len() < sparsity.min(h.rows()) {
        if residual.frobenius_norm_sq() <= RESIDUAL_FLOOR * y_energy {
            break;
        }
        let corr = hh.matmul(&residual)?;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..users {
            if column_norms[k] == 0.0 || selected.contains(&k) {
                continue;
            }
            let score = corr.row_norm_sq(k) / column_norms[k];
            if best.map_or(score > 0.0, |(_, b)| score > b) {
                best = Some((k, score));
            }
        }
        let Some((k, _)) = best else { break };
        selected.push(k);
        let mut sorted = selected.clone();
        sorted.sort_unstable();
        match least_squares(&h.select_columns(&sorted), y) {
            Ok(w) => {
                residual = y.sub(&h.select_columns(&sorted).matmul(&w)?)?;
                coeffs = w;
            }
            Err(Error::RankDeficient { .. }) => {
                selected.pop();
                issue = Some(RecoveryIssue::RankDeficient);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    selected.sort_unstable();
    Ok((selected, coeffs, issue))
}
