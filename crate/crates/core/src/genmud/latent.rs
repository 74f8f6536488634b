//! Measurement misfit in latent space and the latent gradient descent.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

use super::network::{GeneratorModel, Mode};
use super::scalar::Scalar;

/// `z` of length `4KJ`, read as `K` positions of `4J` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentPoint {
    pub z: Vec<f64>,
}

impl LatentPoint {
    pub fn new(z: Vec<f64>, users: usize, slots: usize) -> Result<Self> {
        if z.len() != 4 * users * slots {
            return Err(Error::ShapeMismatch(alloc::format!(
                "latent has {} entries, expected 4*{users}*{slots}",
                z.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent point"));
        }
        Ok(Self { z })
    }

    /// Standard normal draw, then shifted and scaled to zero mean and unit
    /// (population) standard deviation.
    pub fn sample<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut z: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        standardize(&mut z);
        Self { z }
    }
}

pub fn standardize(z: &mut [f64]) {
    if z.is_empty() {
        return;
    }
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = Float::sqrt(var);
    for v in z.iter_mut() {
        *v = if std > 0.0 { (*v - mean) / std } else { *v - mean };
    }
}

/// `Y` and `H` split into real and imaginary parts, row-major.
///
/// Generator outputs are flat `K x 2J` vectors where position `k` holds
/// `[Re X[k, ·], Im X[k, ·]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    users: usize,
    slots: usize,
    subcarriers: usize,
    h_re: Vec<f64>,
    h_im: Vec<f64>,
    y_re: Vec<f64>,
    y_im: Vec<f64>,
}

impl Measurement {
    pub fn new(y: &ComplexMatrix, h: &ComplexMatrix) -> Result<Self> {
        if y.rows() != h.rows() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "Y has {} rows, H has {}",
                y.rows(),
                h.rows()
            )));
        }
        let split = |m: &ComplexMatrix| -> (Vec<f64>, Vec<f64>) {
            m.row_major().iter().map(|c| (c.re, c.im)).unzip()
        };
        let (h_re, h_im) = split(h);
        let (y_re, y_im) = split(y);
        Ok(Self { users: h.cols(), slots: y.cols(), subcarriers: h.rows(), h_re, h_im, y_re, y_im })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Length of a generator output for this problem.
    pub fn output_len(&self) -> usize {
        2 * self.users * self.slots
    }

    /// `H X` for `X` given in generator layout, as `(re, im)` row-major `M x J`.
    pub fn apply<T: Scalar>(&self, gen: &[T]) -> (Vec<T>, Vec<T>) {
        let (m_count, k_count, j_count) = (self.subcarriers, self.users, self.slots);
        let mut re = alloc::vec![T::zero(); m_count * j_count];
        let mut im = alloc::vec![T::zero(); m_count * j_count];
        for m in 0..m_count {
            for k in 0..k_count {
                let (hr, hi) = (self.h_re[m * k_count + k], self.h_im[m * k_count + k]);
                let x = &gen[k * 2 * j_count..(k + 1) * 2 * j_count];
                for j in 0..j_count {
                    let (xr, xi) = (x[j], x[j_count + j]);
                    re[m * j_count + j] += xr.scale(hr) - xi.scale(hi);
                    im[m * j_count + j] += xi.scale(hr) + xr.scale(hi);
                }
            }
        }
        (re, im)
    }

    /// `Hᴴ R` in generator layout.
    pub fn adjoint<T: Scalar>(&self, re: &[T], im: &[T]) -> Vec<T> {
        let (m_count, k_count, j_count) = (self.subcarriers, self.users, self.slots);
        let mut out = alloc::vec![T::zero(); 2 * k_count * j_count];
        for m in 0..m_count {
            for k in 0..k_count {
                let (hr, hi) = (self.h_re[m * k_count + k], self.h_im[m * k_count + k]);
                let x = &mut out[k * 2 * j_count..(k + 1) * 2 * j_count];
                for j in 0..j_count {
                    let (rr, ri) = (re[m * j_count + j], im[m * j_count + j]);
                    x[j] += rr.scale(hr) + ri.scale(hi);
                    x[j_count + j] += ri.scale(hr) - rr.scale(hi);
                }
            }
        }
        out
    }

    /// `‖Y − H X‖²_F` and its gradient `−2 Hᴴ(Y − H X)` with respect to the
    /// generator output.
    pub fn loss_grad<T: Scalar>(&self, gen: &[T]) -> (T, Vec<T>) {
        let (mut re, mut im) = self.apply(gen);
        let mut loss = T::zero();
        for (r, y) in re.iter_mut().zip(&self.y_re) {
            *r = T::cst(*y) - *r;
            loss += *r * *r;
        }
        for (r, y) in im.iter_mut().zip(&self.y_im) {
            *r = T::cst(*y) - *r;
            loss += *r * *r;
        }
        let mut grad = self.adjoint(&re, &im);
        for g in &mut grad {
            *g = g.scale(-2.0);
        }
        (loss, grad)
    }
}

/// Generator output as a complex `K x J` matrix.
pub fn output_to_matrix(gen: &[f64], users: usize, slots: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(users, slots, |k, j| {
        Complex64::new(gen[k * 2 * slots + j], gen[k * 2 * slots + slots + j])
    })
}

/// Inverse of [`output_to_matrix`].
pub fn matrix_to_output(x: &ComplexMatrix) -> Vec<f64> {
    let (users, slots) = x.shape();
    let mut gen = alloc::vec![0.0; 2 * users * slots];
    for k in 0..users {
        for j in 0..slots {
            let v = x.get(k, j);
            gen[k * 2 * slots + j] = v.re;
            gen[k * 2 * slots + slots + j] = v.im;
        }
    }
    gen
}

/// Anything latent descent and detection can run against.
pub trait Generator {
    fn latent_len(&self) -> usize;
    /// Latent step size `α`.
    fn step_size(&self) -> f64;
    /// Output in generator layout.
    fn generate(&self, z: &[f64]) -> Vec<f64>;
    /// Misfit `‖Y − H G(z)‖²` and its gradient in `z`.
    fn loss_grad(&self, z: &[f64], meas: &Measurement) -> (f64, Vec<f64>);
}

impl Generator for GeneratorModel {
    fn latent_len(&self) -> usize {
        self.arch.latent_len()
    }

    fn step_size(&self) -> f64 {
        self.alpha
    }

    fn generate(&self, z: &[f64]) -> Vec<f64> {
        GeneratorModel::generate(self, z)
    }

    fn loss_grad(&self, z: &[f64], meas: &Measurement) -> (f64, Vec<f64>) {
        let fwd = self.forward(z, Mode::Eval);
        let (loss, dout) = meas.loss_grad(&fwd.out);
        let (dz, _) = self.backward(&fwd, &dout, false);
        (loss, dz)
    }
}

/// Measurement loss at `z` and its latent gradient, in evaluation mode.
pub fn measurement_loss<G: Generator + ?Sized>(gen: &G, z: &LatentPoint, meas: &Measurement) -> (f64, Vec<f64>) {
    gen.loss_grad(&z.z, meas)
}

/// Samples a standardised `z₀` and takes `steps` plain gradient steps of
/// size `α` on the measurement loss.
pub fn latent_descent<G: Generator + ?Sized, R: Rng + ?Sized>(
    gen: &G,
    meas: &Measurement,
    steps: usize,
    rng: &mut R,
) -> LatentPoint {
    let start = LatentPoint::sample(gen.latent_len(), rng);
    descend_from(gen, meas, start, steps)
}

/// Latent descent from a given starting point.
pub fn descend_from<G: Generator + ?Sized>(
    gen: &G,
    meas: &Measurement,
    mut point: LatentPoint,
    steps: usize,
) -> LatentPoint {
    let alpha = gen.step_size();
    for _ in 0..steps {
        let (_, grad) = gen.loss_grad(&point.z, meas);
        for (z, g) in point.z.iter_mut().zip(&grad) {
            *z -= alpha * g;
        }
    }
    point
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genmud::network::Architecture;
    use crate::rng::SimRng;
    use crate::system::{Scenario, SpreadingMatrix, SystemConfig};
    use rand::SeedableRng;

    fn instance(seed: u64) -> (GeneratorModel, Measurement) {
        let cfg = SystemConfig { users: 6, subcarriers: 4, slots: 3, active: 2, snr_db: 10.0, seed: 1 };
        let sc = Scenario::generate(&cfg, &SpreadingMatrix::for_config(&cfg), seed).unwrap();
        let arch = Architecture::new(6, 3).with_hidden(8, 8);
        let model = GeneratorModel::init(arch, 0.01, &mut SimRng::seed_from_u64(seed)).unwrap();
        (model, Measurement::new(&sc.received.y, sc.channel.effective()).unwrap())
    }

    #[test]
    fn matches_complex_matrix_product() {
        let (_, meas) = instance(1);
        let mut rng = SimRng::seed_from_u64(2);
        let gen: Vec<f64> = (0..meas.output_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = output_to_matrix(&gen, 6, 3);
        assert_eq!(matrix_to_output(&x), gen);
        let cfg = SystemConfig { users: 6, subcarriers: 4, slots: 3, active: 2, snr_db: 10.0, seed: 1 };
        let sc = Scenario::generate(&cfg, &SpreadingMatrix::for_config(&cfg), 1).unwrap();
        let resid = sc.received.y.sub(&sc.channel.effective().matmul(&x).unwrap()).unwrap();
        let (loss, _) = meas.loss_grad(&gen);
        assert!((loss - resid.frobenius_norm_sq()).abs() < 1e-12 * loss.max(1.0));
    }

    #[test]
    fn latent_gradient_matches_finite_differences() {
        for seed in 0..3 {
            let (model, meas) = instance(seed);
            let z = LatentPoint::sample(model.arch.latent_len(), &mut SimRng::seed_from_u64(seed + 9));
            let (_, grad) = measurement_loss(&model, &z, &meas);
            let scale = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
            for i in (0..z.z.len()).step_by(3) {
                let h = 1e-6 * z.z[i].abs().max(1.0);
                let (mut zp, mut zm) = (z.clone(), z.clone());
                zp.z[i] += h;
                zm.z[i] -= h;
                let fd = (measurement_loss(&model, &zp, &meas).0 - measurement_loss(&model, &zm, &meas).0) / (2.0 * h);
                let denom = fd.abs().max(grad[i].abs()).max(1e-6 * scale);
                assert!((fd - grad[i]).abs() <= 1e-5 * denom, "{i}: {fd} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn quadratic_homogeneity() {
        let (model, meas) = instance(4);
        let z = LatentPoint::sample(model.arch.latent_len(), &mut SimRng::seed_from_u64(3));
        let c = 2.5;
        let scaled = Measurement {
            h_re: meas.h_re.iter().map(|v| v * c).collect(),
            h_im: meas.h_im.iter().map(|v| v * c).collect(),
            y_re: meas.y_re.iter().map(|v| v * c).collect(),
            y_im: meas.y_im.iter().map(|v| v * c).collect(),
            ..meas.clone()
        };
        let a = measurement_loss(&model, &z, &meas).0;
        let b = measurement_loss(&model, &z, &scaled).0;
        assert!((b - c * c * a).abs() < 1e-12 * b);
    }

    #[test]
    fn zero_steps_and_zero_step_size_are_no_ops() {
        let (mut model, meas) = instance(5);
        let z0 = LatentPoint::sample(model.arch.latent_len(), &mut SimRng::seed_from_u64(7));
        let z = latent_descent(&model, &meas, 0, &mut SimRng::seed_from_u64(7));
        assert_eq!(z, z0);
        let mean = z.z.iter().sum::<f64>() / z.z.len() as f64;
        let var = z.z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.z.len() as f64;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);

        model.alpha = 0.0;
        assert_eq!(latent_descent(&model, &meas, 5, &mut SimRng::seed_from_u64(7)), z0);
    }

    #[test]
    fn rejects_wrong_latent_length() {
        assert!(LatentPoint::new(alloc::vec![0.0; 10], 2, 2).is_err());
        assert!(LatentPoint::new(alloc::vec![0.0; 16], 2, 2).is_ok());
        assert!(LatentPoint::new(alloc::vec![f64::NAN; 16], 2, 2).is_err());
    }
}
