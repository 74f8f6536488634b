use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::select::top_indices;
use crate::system::{nearest_symbol, Frame};

use super::latent::{latent_descent, output_to_matrix, Generator, Measurement};

/// How the active rows are picked from the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    /// One support for the whole frame, ranked by `Σ_j |X̃[k, j]|²`.
    #[default]
    Joint,
    /// Top entries of each slot independently.
    PerSlot,
}

/// Latent descent, then keeps the `S` strongest users and maps them to the
/// nearest QPSK symbol. Ties go to the lower user index.
pub fn genmud_detect<G: Generator + ?Sized, R: Rng + ?Sized>(
    gen: &G,
    y: &ComplexMatrix,
    h: &ComplexMatrix,
    sparsity: usize,
    steps: usize,
    selection: Selection,
    rng: &mut R,
) -> Result<Frame> {
    let (users, slots) = (h.cols(), y.cols());
    if gen.latent_len() != 4 * users * slots {
        return Err(Error::ShapeMismatch(alloc::format!(
            "generator expects a latent of {} entries, problem has K={users}, J={slots}",
            gen.latent_len()
        )));
    }
    let meas = Measurement::new(y, h)?;
    let z = latent_descent(gen, &meas, steps, rng);
    let out = gen.generate(&z.z);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("generator output"));
    }
    Ok(map_to_frame(&output_to_matrix(&out, users, slots), sparsity, selection))
}

/// Row selection and symbol mapping applied to a soft estimate.
pub fn map_to_frame(soft: &ComplexMatrix, sparsity: usize, selection: Selection) -> Frame {
    let (users, slots) = soft.shape();
    let count = sparsity.min(users);
    let mut symbols = ComplexMatrix::zeros(users, slots);
    match selection {
        Selection::Joint => {
            let scores: Vec<f64> = (0..users).map(|k| soft.row_norm_sq(k)).collect();
            for k in top_indices(&scores, count) {
                for j in 0..slots {
                    symbols.set(k, j, nearest_symbol(soft.get(k, j)));
                }
            }
        }
        Selection::PerSlot => {
            for j in 0..slots {
                let scores: Vec<f64> = (0..users).map(|k| soft.get(k, j).norm_sqr()).collect();
                for k in top_indices(&scores, count) {
                    symbols.set(k, j, nearest_symbol(soft.get(k, j)));
                }
            }
        }
    }
    Frame::from_symbols(symbols)
}
