//! Symbol error rate, detection probability and false-alarm probability.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::Frame;

/// Per-slot error counts of one detected frame.
///
/// Counts are kept as integers so that sums over many trials do not depend on
/// accumulation order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorCounts {
    pub active: u64,
    pub inactive: u64,
    pub symbol_errors: u64,
    pub detected_active: u64,
    pub false_alarms: u64,
}

impl ErrorCounts {
    pub fn merge(&mut self, other: &ErrorCounts) {
        self.active += other.active;
        self.inactive += other.inactive;
        self.symbol_errors += other.symbol_errors;
        self.detected_active += other.detected_active;
        self.false_alarms += other.false_alarms;
    }

    pub fn ser(&self) -> f64 {
        ratio(self.symbol_errors, self.active)
    }

    pub fn pd(&self) -> f64 {
        ratio(self.detected_active, self.active)
    }

    pub fn pfa(&self) -> f64 {
        ratio(self.false_alarms, self.inactive)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub ser: f64,
    pub pd: f64,
    pub pfa: f64,
    pub ser_per_slot: Vec<f64>,
    pub pd_per_slot: Vec<f64>,
    pub pfa_per_slot: Vec<f64>,
}

/// Counts over all slots of a frame.
pub fn count_errors(truth: &Frame, estimate: &Frame) -> Result<ErrorCounts> {
    let per_slot = slot_counts(truth, estimate)?;
    let mut total = ErrorCounts::default();
    per_slot.iter().for_each(|c| total.merge(c));
    Ok(total)
}

fn slot_counts(truth: &Frame, estimate: &Frame) -> Result<Vec<ErrorCounts>> {
    if truth.symbols().shape() != estimate.symbols().shape() {
        return Err(Error::ShapeMismatch(format!(
            "truth {:?} vs estimate {:?}",
            truth.symbols().shape(),
            estimate.symbols().shape()
        )));
    }
    let users = truth.users();
    let active = truth.sparsity();
    if active == users {
        return Err(Error::SaturatedSupport);
    }
    let zero = Complex64::new(0.0, 0.0);
    let out = (0..truth.slots())
        .map(|j| {
            let mut c = ErrorCounts {
                active: active as u64,
                inactive: (users - active) as u64,
                ..ErrorCounts::default()
            };
            let mut next_active = truth.support().iter().peekable();
            for k in 0..users {
                let is_active = next_active.next_if_eq(&&k).is_some();
                let est = estimate.symbols().get(k, j);
                if is_active {
                    c.symbol_errors += u64::from(est != truth.symbols().get(k, j));
                    c.detected_active += u64::from(est != zero);
                } else {
                    c.false_alarms += u64::from(est != zero);
                }
            }
            c
        })
        .collect();
    Ok(out)
}

/// Frame-level metrics as the unweighted mean of the per-slot values.
pub fn evaluate(truth: &Frame, estimate: &Frame) -> Result<DetectionReport> {
    let per_slot = slot_counts(truth, estimate)?;
    let ser_per_slot: Vec<f64> = per_slot.iter().map(ErrorCounts::ser).collect();
    let pd_per_slot: Vec<f64> = per_slot.iter().map(ErrorCounts::pd).collect();
    let pfa_per_slot: Vec<f64> = per_slot.iter().map(ErrorCounts::pfa).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(DetectionReport {
        ser: mean(&ser_per_slot),
        pd: mean(&pd_per_slot),
        pfa: mean(&pfa_per_slot),
        ser_per_slot,
        pd_per_slot,
        pfa_per_slot,
    })
}

/// `|S - Ŝ| / S`.
pub fn normalized_error(s_true: usize, s_hat: f64) -> f64 {
    let s = s_true as f64;
    (s - s_hat).abs() / s
}
