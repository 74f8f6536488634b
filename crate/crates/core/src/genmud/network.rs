//! Kernel-1 convolutional generator.
//!
//! The latent vector is read as `K` positions with `4J` channels each. Every
//! position passes through the same three pointwise layers
//! (`4J → C₁ → C₂ → 2J`), the first two followed by LeakyReLU then batch
//! normalisation, the last by `tanh`. No weight couples two users, so the
//! output for user `k` depends on the latent channels of position `k` alone
//! (plus the batch statistics in training mode).
//!
//! Output position `k` holds `[Re X[k, 0..J], Im X[k, 0..J]]`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};

use super::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Architecture {
    pub users: usize,
    pub slots: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub leaky_slope: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Architecture {
    pub const DEFAULT_HIDDEN: usize = 64;

    pub fn new(users: usize, slots: usize) -> Self {
        Self {
            users,
            slots,
            hidden1: Self::DEFAULT_HIDDEN,
            hidden2: Self::DEFAULT_HIDDEN,
            leaky_slope: 0.2,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }

    pub fn with_hidden(mut self, hidden1: usize, hidden2: usize) -> Self {
        self.hidden1 = hidden1;
        self.hidden2 = hidden2;
        self
    }

    pub fn in_channels(&self) -> usize {
        4 * self.slots
    }

    pub fn out_channels(&self) -> usize {
        2 * self.slots
    }

    /// `4KJ`.
    pub fn latent_len(&self) -> usize {
        self.users * self.in_channels()
    }

    /// `2KJ`.
    pub fn output_len(&self) -> usize {
        self.users * self.out_channels()
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.slots == 0 || self.hidden1 == 0 || self.hidden2 == 0 {
            return Err(Error::InvalidConfig(alloc::format!("degenerate architecture {self:?}")));
        }
        if !(self.bn_eps > 0.0) || !(0.0..=1.0).contains(&self.bn_momentum) || !self.leaky_slope.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!("bad normalisation settings {self:?}")));
        }
        Ok(())
    }
}

/// Offsets of each parameter block inside the flat parameter vector, in
/// storage order: `W₁ b₁ γ₁ β₁ W₂ b₂ γ₂ β₂ W₃ b₃`. Weights are row-major
/// `[out_channel][in_channel]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub w1: usize,
    pub b1: usize,
    pub gamma1: usize,
    pub beta1: usize,
    pub w2: usize,
    pub b2: usize,
    pub gamma2: usize,
    pub beta2: usize,
    pub w3: usize,
    pub b3: usize,
    pub len: usize,
}

impl ParamLayout {
    fn new(a: &Architecture) -> Self {
        let (ci, h1, h2, co) = (a.in_channels(), a.hidden1, a.hidden2, a.out_channels());
        let w1 = 0;
        let b1 = w1 + h1 * ci;
        let gamma1 = b1 + h1;
        let beta1 = gamma1 + h1;
        let w2 = beta1 + h1;
        let b2 = w2 + h2 * h1;
        let gamma2 = b2 + h2;
        let beta2 = gamma2 + h2;
        let w3 = beta2 + h2;
        let b3 = w3 + co * h2;
        let len = b3 + co;
        Self { w1, b1, gamma1, beta1, w2, b2, gamma2, beta2, w3, b3, len }
    }
}

/// Batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub mean1: Vec<f64>,
    pub var1: Vec<f64>,
    pub mean2: Vec<f64>,
    pub var2: Vec<f64>,
}

impl RunningStats {
    pub fn new(a: &Architecture) -> Self {
        Self {
            mean1: vec![0.0; a.hidden1],
            var1: vec![1.0; a.hidden1],
            mean2: vec![0.0; a.hidden2],
            var2: vec![1.0; a.hidden2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics of the current call.
    Train,
    /// Running statistics.
    Eval,
}

/// Trainable generator `G_θ` plus the learned latent step size `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorModel {
    pub arch: Architecture,
    pub params: Vec<f64>,
    pub running: RunningStats,
    pub alpha: f64,
}

impl GeneratorModel {
    /// Uniform `±1/√fan_in` weights and biases, unit scale and zero shift.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, alpha: f64, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        if !(alpha > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("step size must be positive, got {alpha}")));
        }
        let l = arch.layout();
        let mut params = vec![0.0; l.len];
        let mut fill = |start: usize, len: usize, fan_in: usize, params: &mut [f64]| {
            let bound = 1.0 / Float::sqrt(fan_in as f64);
            for p in &mut params[start..start + len] {
                *p = rng.random_range(-bound..bound);
            }
        };
        let (ci, h1, h2, co) = (arch.in_channels(), arch.hidden1, arch.hidden2, arch.out_channels());
        fill(l.w1, h1 * ci, ci, &mut params);
        fill(l.b1, h1, ci, &mut params);
        fill(l.w2, h2 * h1, h1, &mut params);
        fill(l.b2, h2, h1, &mut params);
        fill(l.w3, co * h2, h2, &mut params);
        fill(l.b3, co, h2, &mut params);
        params[l.gamma1..l.gamma1 + h1].fill(1.0);
        params[l.gamma2..l.gamma2 + h2].fill(1.0);
        Ok(Self { running: RunningStats::new(&arch), arch, params, alpha })
    }

    pub fn layout(&self) -> ParamLayout {
        self.arch.layout()
    }

    /// Checks shapes, finiteness and positivity of every stored value.
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let a = &self.arch;
        let r = &self.running;
        if self.params.len() != a.layout().len
            || r.mean1.len() != a.hidden1
            || r.var1.len() != a.hidden1
            || r.mean2.len() != a.hidden2
            || r.var2.len() != a.hidden2
        {
            return Err(Error::ShapeMismatch("parameter blocks do not match the architecture".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.params) || !finite(&r.mean1) || !finite(&r.mean2) || !self.alpha.is_finite() {
            return Err(Error::NonFinite("generator parameters"));
        }
        if r.var1.iter().chain(&r.var2).any(|v| !(*v > 0.0)) || !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig("running variances and step size must be positive".into()));
        }
        Ok(())
    }

    /// Runs the network on one latent vector, or on several concatenated
    /// ones. In training mode the batch statistics are pooled over every
    /// position of the call.
    pub fn forward<T: Scalar>(&self, z: &[T], mode: Mode) -> Forward<T> {
        let a = &self.arch;
        assert!(
            !z.is_empty() && z.len() % a.latent_len() == 0,
            "latent length {} is not a multiple of {}",
            z.len(),
            a.latent_len()
        );
        let l = self.layout();
        let p = &self.params;
        let positions = z.len() / a.in_channels();
        let block1 = hidden_forward(
            z,
            positions,
            a.in_channels(),
            a.hidden1,
            &p[l.w1..l.b1],
            &p[l.b1..l.gamma1],
            &p[l.gamma1..l.beta1],
            &p[l.beta1..l.w2],
            (&self.running.mean1, &self.running.var1),
            mode,
            a,
        );
        let block2 = hidden_forward(
            &block1.out,
            positions,
            a.hidden1,
            a.hidden2,
            &p[l.w2..l.b2],
            &p[l.b2..l.gamma2],
            &p[l.gamma2..l.beta2],
            &p[l.beta2..l.w3],
            (&self.running.mean2, &self.running.var2),
            mode,
            a,
        );
        let co = a.out_channels();
        let mut out = linear(&block2.out, positions, a.hidden2, co, &p[l.w3..l.b3], &p[l.b3..l.len]);
        for v in &mut out {
            *v = v.tanh();
        }
        Forward { mode, z: z.to_vec(), block1, block2, out }
    }

    /// Output only, in evaluation mode.
    pub fn generate(&self, z: &[f64]) -> Vec<f64> {
        self.forward(z, Mode::Eval).out
    }

    /// Reverse pass for the output cotangent `dout`. Returns the latent
    /// gradient and, when `with_params` is set, the parameter gradient.
    pub fn backward<T: Scalar>(
        &self,
        fwd: &Forward<T>,
        dout: &[T],
        with_params: bool,
    ) -> (Vec<T>, Option<Vec<T>>) {
        let a = &self.arch;
        let l = self.layout();
        let p = &self.params;
        let positions = fwd.z.len() / a.in_channels();
        let co = a.out_channels();
        let mut grads = with_params.then(|| vec![T::zero(); l.len]);

        let dpre3: Vec<T> = fwd
            .out
            .iter()
            .zip(dout)
            .map(|(&o, &d)| d * (T::cst(1.0) - o * o))
            .collect();
        let dh2 = linear_backward(
            &fwd.block2.out,
            &dpre3,
            positions,
            a.hidden2,
            co,
            &p[l.w3..l.b3],
            grads.as_mut().map(|g| {
                let (w, b) = g[l.w3..l.len].split_at_mut(co * a.hidden2);
                (w, b)
            }),
        );
        let dh1 = hidden_backward(
            &fwd.block1.out,
            &fwd.block2,
            &dh2,
            positions,
            a.hidden1,
            a.hidden2,
            &p[l.w2..l.b2],
            &p[l.gamma2..l.beta2],
            fwd.mode,
            a.leaky_slope,
            grads.as_mut().map(|g| split4(&mut g[l.w2..l.w3], a.hidden2 * a.hidden1, a.hidden2)),
        );
        let dz = hidden_backward(
            &fwd.z,
            &fwd.block1,
            &dh1,
            positions,
            a.in_channels(),
            a.hidden1,
            &p[l.w1..l.b1],
            &p[l.gamma1..l.beta1],
            fwd.mode,
            a.leaky_slope,
            grads.as_mut().map(|g| split4(&mut g[l.w1..l.w2], a.hidden1 * a.in_channels(), a.hidden1)),
        );
        (dz, grads)
    }

    /// Exponential moving average of batch statistics.
    pub fn update_running_stats(&mut self, mean1: &[f64], var1: &[f64], mean2: &[f64], var2: &[f64]) {
        let m = self.arch.bn_momentum;
        let blend = |run: &mut [f64], batch: &[f64]| {
            for (r, b) in run.iter_mut().zip(batch) {
                *r = (1.0 - m) * *r + m * b;
            }
        };
        blend(&mut self.running.mean1, mean1);
        blend(&mut self.running.var1, var1);
        blend(&mut self.running.mean2, mean2);
        blend(&mut self.running.var2, var2);
    }
}

type GradBlocks<'a, T> = (&'a mut [T], &'a mut [T], &'a mut [T], &'a mut [T]);

fn split4<T>(g: &mut [T], weights: usize, channels: usize) -> GradBlocks<'_, T> {
    let (w, rest) = g.split_at_mut(weights);
    let (b, rest) = rest.split_at_mut(channels);
    let (gamma, beta) = rest.split_at_mut(channels);
    (w, b, gamma, beta)
}

/// Intermediate values of one hidden block.
#[derive(Debug, Clone)]
pub struct HiddenBlock<T> {
    pre: Vec<T>,
    xhat: Vec<T>,
    invstd: Vec<T>,
    pub out: Vec<T>,
    /// Batch mean and (biased) variance per channel; the running values in eval mode.
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Cached forward pass.
#[derive(Debug, Clone)]
pub struct Forward<T> {
    mode: Mode,
    z: Vec<T>,
    pub block1: HiddenBlock<T>,
    pub block2: HiddenBlock<T>,
    /// `K x 2J`, position-major.
    pub out: Vec<T>,
}

fn linear<T: Scalar>(input: &[T], positions: usize, ic: usize, oc: usize, w: &[f64], b: &[f64]) -> Vec<T> {
    let mut out = Vec::with_capacity(positions * oc);
    for p in 0..positions {
        let x = &input[p * ic..(p + 1) * ic];
        for c in 0..oc {
            let row = &w[c * ic..(c + 1) * ic];
            let mut acc = T::cst(b[c]);
            for (xi, wi) in x.iter().zip(row) {
                acc += xi.scale(*wi);
            }
            out.push(acc);
        }
    }
    out
}

fn linear_backward<T: Scalar>(
    input: &[T],
    dpre: &[T],
    positions: usize,
    ic: usize,
    oc: usize,
    w: &[f64],
    grads: Option<(&mut [T], &mut [T])>,
) -> Vec<T> {
    let mut dinput = vec![T::zero(); positions * ic];
    for p in 0..positions {
        let dx = &mut dinput[p * ic..(p + 1) * ic];
        for c in 0..oc {
            let d = dpre[p * oc + c];
            for (dxi, wi) in dx.iter_mut().zip(&w[c * ic..(c + 1) * ic]) {
                *dxi += d.scale(*wi);
            }
        }
    }
    if let Some((dw, db)) = grads {
        for p in 0..positions {
            let x = &input[p * ic..(p + 1) * ic];
            for c in 0..oc {
                let d = dpre[p * oc + c];
                db[c] += d;
                for (g, xi) in dw[c * ic..(c + 1) * ic].iter_mut().zip(x) {
                    *g += d * *xi;
                }
            }
        }
    }
    dinput
}

#[allow(clippy::too_many_arguments)]
fn hidden_forward<T: Scalar>(
    input: &[T],
    positions: usize,
    ic: usize,
    oc: usize,
    w: &[f64],
    b: &[f64],
    gamma: &[f64],
    beta: &[f64],
    running: (&[f64], &[f64]),
    mode: Mode,
    arch: &Architecture,
) -> HiddenBlock<T> {
    let pre = linear(input, positions, ic, oc, w, b);
    let slope = arch.leaky_slope;
    let act: Vec<T> = pre
        .iter()
        .map(|&v| if v.value() > 0.0 { v } else { v.scale(slope) })
        .collect();
    let n = positions as f64;
    let (mean, var): (Vec<T>, Vec<T>) = match mode {
        Mode::Train => (0..oc)
            .map(|c| {
                let mut m = T::zero();
                for p in 0..positions {
                    m += act[p * oc + c];
                }
                let m = m.scale(1.0 / n);
                let mut v = T::zero();
                for p in 0..positions {
                    let d = act[p * oc + c] - m;
                    v += d * d;
                }
                (m, v.scale(1.0 / n))
            })
            .unzip(),
        Mode::Eval => (
            running.0.iter().map(|&m| T::cst(m)).collect(),
            running.1.iter().map(|&v| T::cst(v)).collect(),
        ),
    };
    let invstd: Vec<T> = var
        .iter()
        .map(|&v| T::cst(1.0) / (v + T::cst(arch.bn_eps)).sqrt())
        .collect();
    let mut xhat = Vec::with_capacity(act.len());
    let mut out = Vec::with_capacity(act.len());
    for p in 0..positions {
        for c in 0..oc {
            let xh = (act[p * oc + c] - mean[c]) * invstd[c];
            xhat.push(xh);
            out.push(xh.scale(gamma[c]) + T::cst(beta[c]));
        }
    }
    HiddenBlock {
        pre,
        xhat,
        invstd,
        out,
        mean: mean.iter().map(|m| m.value()).collect(),
        var: var.iter().map(|v| v.value()).collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn hidden_backward<T: Scalar>(
    input: &[T],
    block: &HiddenBlock<T>,
    dout: &[T],
    positions: usize,
    ic: usize,
    oc: usize,
    w: &[f64],
    gamma: &[f64],
    mode: Mode,
    slope: f64,
    grads: Option<GradBlocks<'_, T>>,
) -> Vec<T> {
    let n = positions as f64;
    let mut dpre = vec![T::zero(); positions * oc];
    let (mut dgamma, mut dbeta) = (vec![T::zero(); oc], vec![T::zero(); oc]);
    for c in 0..oc {
        let (mut sum_d, mut sum_dx) = (T::zero(), T::zero());
        for p in 0..positions {
            let i = p * oc + c;
            dgamma[c] += dout[i] * block.xhat[i];
            dbeta[c] += dout[i];
            let dxhat = dout[i].scale(gamma[c]);
            sum_d += dxhat;
            sum_dx += dxhat * block.xhat[i];
        }
        for p in 0..positions {
            let i = p * oc + c;
            let dxhat = dout[i].scale(gamma[c]);
            let dact = match mode {
                Mode::Train => {
                    block.invstd[c] * (dxhat - sum_d.scale(1.0 / n) - block.xhat[i] * sum_dx.scale(1.0 / n))
                }
                Mode::Eval => dxhat * block.invstd[c],
            };
            dpre[i] = if block.pre[i].value() > 0.0 { dact } else { dact.scale(slope) };
        }
    }
    match grads {
        Some((dw, db, dg, dbt)) => {
            for c in 0..oc {
                dg[c] += dgamma[c];
                dbt[c] += dbeta[c];
            }
            linear_backward(input, &dpre, positions, ic, oc, w, Some((dw, db)))
        }
        None => linear_backward(input, &dpre, positions, ic, oc, w, None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;
    use rand_distr::StandardNormal;

    pub(crate) fn small_model(seed: u64) -> GeneratorModel {
        let arch = Architecture::new(5, 2).with_hidden(6, 7);
        let mut m = GeneratorModel::init(arch, 0.01, &mut SimRng::seed_from_u64(seed)).unwrap();
        let mut rng = SimRng::seed_from_u64(seed + 100);
        let l = m.layout();
        for g in &mut m.params[l.gamma1..l.w2] {
            *g += rng.random_range(-0.3..0.3);
        }
        for g in &mut m.params[l.gamma2..l.w3] {
            *g += rng.random_range(-0.3..0.3);
        }
        for v in m.running.mean1.iter_mut().chain(m.running.mean2.iter_mut()) {
            *v = rng.random_range(-0.5..0.5);
        }
        for v in m.running.var1.iter_mut().chain(m.running.var2.iter_mut()) {
            *v = rng.random_range(0.5..2.0);
        }
        m
    }

    fn latent(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = SimRng::seed_from_u64(seed);
        (0..len).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn outputs_stay_in_tanh_range() {
        let m = small_model(1);
        for s in 0..1000 {
            let z: Vec<f64> = latent(m.arch.latent_len(), s).iter().map(|v| v * 10.0).collect();
            for mode in [Mode::Train, Mode::Eval] {
                assert!(m.forward(&z, mode).out.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut m = small_model(2);
        m.params.fill(0.0);
        let z = latent(m.arch.latent_len(), 3);
        assert!(m.generate(&z).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn permuting_users_permutes_outputs() {
        let m = small_model(3);
        let z = latent(m.arch.latent_len(), 4);
        let (ci, co, k) = (m.arch.in_channels(), m.arch.out_channels(), m.arch.users);
        let perm = [3, 0, 4, 1, 2];
        let mut zp = vec![0.0; z.len()];
        for (dst, &src) in perm.iter().enumerate() {
            zp[dst * ci..(dst + 1) * ci].copy_from_slice(&z[src * ci..(src + 1) * ci]);
        }
        for mode in [Mode::Train, Mode::Eval] {
            let out = m.forward(&z, mode).out;
            let outp = m.forward(&zp, mode).out;
            for dst in 0..k {
                let src = perm[dst];
                let (a, b) = (&outp[dst * co..(dst + 1) * co], &out[src * co..(src + 1) * co]);
                match mode {
                    Mode::Eval => assert_eq!(a, b),
                    // Batch statistics are summed in a different order.
                    Mode::Train => assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-13)),
                }
            }
        }
    }

    #[test]
    fn init_rejects_bad_inputs() {
        let arch = Architecture::new(4, 2);
        assert!(GeneratorModel::init(arch, 0.0, &mut SimRng::seed_from_u64(0)).is_err());
        assert!(GeneratorModel::init(arch.with_hidden(0, 3), 0.1, &mut SimRng::seed_from_u64(0)).is_err());
        let m = GeneratorModel::init(arch, 0.1, &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(m.params.len(), 8 * 64 + 64 * 3 + 64 * 64 + 64 * 3 + 4 * 64 + 4);
        m.validate().unwrap();
    }

    /// Central differences of `Σ w ⊙ G(z)` against the reverse pass.
    #[test]
    fn backward_matches_finite_differences() {
        let m = small_model(5);
        let z = latent(m.arch.latent_len(), 6);
        let weights = latent(m.arch.output_len(), 7);
        let objective = |model: &GeneratorModel, z: &[f64], mode| -> f64 {
            model.forward(z, mode).out.iter().zip(&weights).map(|(o, w)| o * w).sum()
        };
        for mode in [Mode::Train, Mode::Eval] {
            let fwd = m.forward(&z, mode);
            let (dz, dp) = m.backward(&fwd, &weights, true);
            let dp = dp.unwrap();
            let h = 1e-6;
            for i in 0..z.len() {
                let (mut zp, mut zm) = (z.clone(), z.clone());
                zp[i] += h;
                zm[i] -= h;
                let fd = (objective(&m, &zp, mode) - objective(&m, &zm, mode)) / (2.0 * h);
                assert!((fd - dz[i]).abs() <= 1e-6 * (1.0 + fd.abs()), "z[{i}] {fd} vs {}", dz[i]);
            }
            for i in 0..m.params.len() {
                let (mut mp, mut mm) = (m.clone(), m.clone());
                mp.params[i] += h;
                mm.params[i] -= h;
                let fd = (objective(&mp, &z, mode) - objective(&mm, &z, mode)) / (2.0 * h);
                assert!((fd - dp[i]).abs() <= 1e-6 * (1.0 + fd.abs()), "theta[{i}] {fd} vs {}", dp[i]);
            }
        }
    }
}
