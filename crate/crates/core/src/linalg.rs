//! Dense complex and real matrices backed by `nalgebra`, plus the real-valued
//! embedding that connects the complex measurement model to the generator's
//! real output.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a system is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Complex dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

/// Real dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix(DMatrix<f64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, |r, c| f(r, c)))
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("complex matrix entries"));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_nalgebra(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[(r, c)]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.0[(r, c)] = v;
    }

    pub fn row_major(&self) -> Vec<Complex64> {
        let (rows, cols) = self.shape();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Squared Euclidean norm of row `r`.
    pub fn row_norm_sq(&self, r: usize) -> f64 {
        self.0.row(r).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Squared Euclidean norm of column `c`.
    pub fn column_norm_sq(&self, c: usize) -> f64 {
        self.0.column(c).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> ComplexMatrix {
        Self(self.0.adjoint())
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(rhs)?;
        Ok(Self(&self.0 + &rhs.0))
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(rhs)?;
        Ok(Self(&self.0 - &rhs.0))
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        Self(&self.0 * s)
    }

    /// Sub-matrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> ComplexMatrix {
        Self(self.0.select_columns(cols))
    }

    fn check_same_shape(&self, rhs: &ComplexMatrix) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        Ok(())
    }
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(DMatrix::from_fn(rows, cols, |r, c| f(r, c)))
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("real matrix entries"));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[(r, c)]
    }

    pub fn row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn matmul(&self, rhs: &RealMatrix) -> Result<RealMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn transpose(&self) -> RealMatrix {
        Self(self.0.transpose())
    }
}

/// `[[Re H, -Im H], [Im H, Re H]]`, so that `embed(H) * [Re x; Im x]` equals
/// `[Re(Hx); Im(Hx)]`.
pub fn real_embed_matrix(h: &ComplexMatrix) -> RealMatrix {
    let (m, k) = h.shape();
    RealMatrix::from_fn(2 * m, 2 * k, |r, c| {
        let z = h.get(r % m, c % k);
        match (r < m, c < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Stacks `[Re X; Im X]`, turning a `K x J` complex matrix into `2K x J`.
pub fn stack_real_imag(x: &ComplexMatrix) -> RealMatrix {
    let (k, j) = x.shape();
    RealMatrix::from_fn(2 * k, j, |r, c| {
        if r < k {
            x.get(r, c).re
        } else {
            x.get(r - k, c).im
        }
    })
}

/// Inverse of [`stack_real_imag`].
pub fn unstack_real_imag(x: &RealMatrix) -> Result<ComplexMatrix> {
    if x.rows() % 2 != 0 {
        return Err(Error::ShapeMismatch(format!(
            "stacked matrix needs an even row count, got {}",
            x.rows()
        )));
    }
    let k = x.rows() / 2;
    Ok(ComplexMatrix::from_fn(k, x.cols(), |r, c| {
        Complex64::new(x.get(r, c), x.get(r + k, c))
    }))
}

/// Singular values of a complex matrix, descending.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = a.0.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Least-squares solution of `A W = B` with the default rank tolerance.
pub fn least_squares(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    least_squares_with_tolerance(a, b, RANK_TOLERANCE)
}

/// Least squares through a thin Householder QR of `A`.
///
/// `A` must be tall (`M >= S`) and its smallest singular value at least
/// `tolerance` times its largest.
pub fn least_squares_with_tolerance(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tolerance: f64,
) -> Result<ComplexMatrix> {
    let (m, s) = a.shape();
    if b.rows() != m {
        return Err(Error::ShapeMismatch(format!(
            "system has {m} rows but right-hand side has {}",
            b.rows()
        )));
    }
    if s == 0 {
        return Ok(ComplexMatrix::zeros(0, b.cols()));
    }
    if m < s {
        return Err(Error::ShapeMismatch(format!(
            "underdetermined system: {m} equations, {s} unknowns"
        )));
    }
    let sv = singular_values(a);
    let largest = sv[0];
    let smallest = sv[sv.len() - 1];
    let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    if !(ratio >= tolerance) {
        return Err(Error::RankDeficient { ratio, tolerance });
    }
    let qr = a.0.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let rhs = q.adjoint() * &b.0;
    let w = r
        .solve_upper_triangular(&rhs)
        .ok_or(Error::RankDeficient { ratio, tolerance })?;
    Ok(ComplexMatrix(w))
}
