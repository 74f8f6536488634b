use alloc::vec::Vec;

use crate::linalg::ComplexMatrix;
use crate::system::{nearest_symbol, Frame};

/// Indices of the `count` largest scores, ties going to the lower index,
/// returned in ascending index order.
pub fn top_indices(scores: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(count.min(scores.len()));
    order.sort_unstable();
    order
}

/// Frame whose rows in `support` are the nearest QPSK points of the matching
/// rows of `coefficients`; every other row is zero.
pub fn frame_from_support(
    users: usize,
    support: &[usize],
    coefficients: &ComplexMatrix,
) -> Frame {
    let slots = coefficients.cols();
    let mut symbols = ComplexMatrix::zeros(users, slots);
    for (row, &k) in support.iter().enumerate() {
        for j in 0..slots {
            symbols.set(k, j, nearest_symbol(coefficients.get(row, j)));
        }
    }
    Frame::from_symbols(symbols)
}
