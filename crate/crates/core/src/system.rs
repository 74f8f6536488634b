//! Uplink grant-free NOMA scenario generation.
//!
//! `K` users spread one QPSK symbol per slot over `M` subcarriers with a
//! Toeplitz sign sequence. Gains are i.i.d. Rayleigh, constant over a frame
//! of `J` slots, and the set of active users is shared by all slots.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::rng::{stream_rng, Stream};

/// QPSK alphabet in Gray order: bits `(b0, b1)` map to `(1 - 2 b1) + i (1 - 2 b0)`.
pub const QPSK: [Complex64; 4] = [
    Complex64::new(1.0, 1.0),
    Complex64::new(-1.0, 1.0),
    Complex64::new(-1.0, -1.0),
    Complex64::new(1.0, -1.0),
];

/// Power of every constellation point.
pub const SYMBOL_POWER: f64 = 2.0;

/// Scenario dimensions and operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Number of users `K`.
    pub users: usize,
    /// Number of subcarriers `M`.
    pub subcarriers: usize,
    /// Frame length `J`.
    pub slots: usize,
    /// Number of active users `S`.
    pub active: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.active == 0 || self.active > self.users {
            return Err(Error::InvalidConfig(format!(
                "active users must satisfy 0 < S <= K, got S={} K={}",
                self.active, self.users
            )));
        }
        if self.subcarriers == 0 || self.slots == 0 {
            return Err(Error::InvalidConfig(format!(
                "need M >= 1 and J >= 1, got M={} J={}",
                self.subcarriers, self.slots
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidConfig(format!("snr_db = {}", self.snr_db)));
        }
        Ok(())
    }

    /// Linear SNR `tau`.
    pub fn tau(&self) -> f64 {
        db_to_linear(self.snr_db)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    Float::powf(10.0, db / 10.0)
}

/// Gray-mapped QPSK symbol for a bit pair.
pub fn qpsk_modulate(bits: (u8, u8)) -> Complex64 {
    let re = if bits.1 == 0 { 1.0 } else { -1.0 };
    let im = if bits.0 == 0 { 1.0 } else { -1.0 };
    Complex64::new(re, im)
}

/// Nearest QPSK point: independent sign decisions, zero counting as positive.
pub fn nearest_symbol(z: Complex64) -> Complex64 {
    let re = if z.re < 0.0 { -1.0 } else { 1.0 };
    let im = if z.im < 0.0 { -1.0 } else { 1.0 };
    Complex64::new(re, im)
}

pub fn is_qpsk(z: Complex64) -> bool {
    QPSK.contains(&z)
}

/// Real `M x K` Toeplitz spreading matrix with entries `±1/√M`.
///
/// Entry `(m, k)` is `sequence[k + M - 1 - m] / √M`, so it depends on `k - m` only.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingMatrix {
    subcarriers: usize,
    users: usize,
    sequence: Vec<i8>,
}

impl SpreadingMatrix {
    /// Draws the `M + K - 1` Rademacher signs that define the matrix.
    pub fn generate<R: Rng + ?Sized>(subcarriers: usize, users: usize, rng: &mut R) -> Self {
        let sequence = (0..subcarriers + users - 1)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self { subcarriers, users, sequence }
    }

    /// Spreading matrix of a configuration, drawn from its spreading stream.
    pub fn for_config(cfg: &SystemConfig) -> Self {
        Self::generate(cfg.subcarriers, cfg.users, &mut stream_rng(cfg.seed, Stream::Spreading))
    }

    pub fn from_sequence(subcarriers: usize, users: usize, sequence: Vec<i8>) -> Result<Self> {
        if subcarriers == 0 || users == 0 || sequence.len() != subcarriers + users - 1 {
            return Err(Error::ShapeMismatch(format!(
                "Toeplitz sequence of length {} for a {subcarriers}x{users} matrix",
                sequence.len()
            )));
        }
        if sequence.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidConfig("spreading signs must be +1 or -1".into()));
        }
        Ok(Self { subcarriers, users, sequence })
    }

    pub fn sequence(&self) -> &[i8] {
        &self.sequence
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn users(&self) -> usize {
        self.users
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> f64 {
        let s = self.sequence[k + self.subcarriers - 1 - m];
        f64::from(s) / Float::sqrt(self.subcarriers as f64)
    }

    pub fn to_matrix(&self) -> RealMatrix {
        RealMatrix::from_fn(self.subcarriers, self.users, |m, k| self.get(m, k))
    }
}

/// Fading gains and the effective channel `h_mk = g_mk s_mk`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    gains: ComplexMatrix,
    effective: ComplexMatrix,
}

impl ChannelMatrix {
    pub fn from_gains(gains: ComplexMatrix, spreading: &SpreadingMatrix) -> Result<Self> {
        if gains.shape() != (spreading.subcarriers, spreading.users) {
            return Err(Error::ShapeMismatch(format!(
                "gains {:?} vs spreading {}x{}",
                gains.shape(),
                spreading.subcarriers,
                spreading.users
            )));
        }
        let effective = ComplexMatrix::from_fn(gains.rows(), gains.cols(), |m, k| {
            gains.get(m, k) * spreading.get(m, k)
        });
        Ok(Self { gains, effective })
    }

    pub fn gains(&self) -> &ComplexMatrix {
        &self.gains
    }

    /// The `M x K` matrix `H` seen by the receiver.
    pub fn effective(&self) -> &ComplexMatrix {
        &self.effective
    }
}

/// Circularly symmetric complex Gaussian sample with variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = Float::sqrt(variance / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Rayleigh channel: unit-variance complex Gaussian gains times the spreading.
pub fn sample_channel<R: Rng + ?Sized>(spreading: &SpreadingMatrix, rng: &mut R) -> ChannelMatrix {
    let gains = ComplexMatrix::from_fn(spreading.subcarriers, spreading.users, |_, _| {
        complex_gaussian(rng, 1.0)
    });
    ChannelMatrix::from_gains(gains, spreading).expect("shapes agree by construction")
}

/// A `K x J` transmitted frame and its common support.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    symbols: ComplexMatrix,
    support: Vec<usize>,
}

impl Frame {
    /// Wraps a symbol matrix; the support is every row with a nonzero entry.
    pub fn from_symbols(symbols: ComplexMatrix) -> Self {
        let support = (0..symbols.rows())
            .filter(|&k| (0..symbols.cols()).any(|j| symbols.get(k, j) != Complex64::new(0.0, 0.0)))
            .collect();
        Self { symbols, support }
    }

    pub fn zeros(users: usize, slots: usize) -> Self {
        Self { symbols: ComplexMatrix::zeros(users, slots), support: Vec::new() }
    }

    pub fn symbols(&self) -> &ComplexMatrix {
        &self.symbols
    }

    /// Sorted zero-based indices of the active users.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn users(&self) -> usize {
        self.symbols.rows()
    }

    pub fn slots(&self) -> usize {
        self.symbols.cols()
    }

    /// True when every nonzero entry is a QPSK point and every active row is
    /// nonzero in all slots.
    pub fn is_jointly_sparse_qpsk(&self) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        (0..self.users()).all(|k| {
            let active = self.support.binary_search(&k).is_ok();
            (0..self.slots()).all(|j| {
                let x = self.symbols.get(k, j);
                if active { is_qpsk(x) } else { x == zero }
            })
        })
    }
}

/// Draws a frame: a uniform size-`S` support and i.i.d. uniform QPSK data.
pub fn sample_frame<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Frame> {
    cfg.validate()?;
    let mut support = index::sample(rng, cfg.users, cfg.active).into_vec();
    support.sort_unstable();
    let mut symbols = ComplexMatrix::zeros(cfg.users, cfg.slots);
    for &k in &support {
        for j in 0..cfg.slots {
            symbols.set(k, j, QPSK[rng.random_range(0..4)]);
        }
    }
    Ok(Frame { symbols, support })
}

/// Per-sample noise variance `2S / (M tau)`, making the total received signal
/// power per slot `tau` times the noise power.
pub fn noise_variance_for_snr(cfg: &SystemConfig) -> f64 {
    noise_variance(cfg.active, cfg.subcarriers, cfg.tau())
}

pub fn noise_variance(active: usize, subcarriers: usize, tau: f64) -> f64 {
    SYMBOL_POWER * active as f64 / (subcarriers as f64 * tau)
}

/// Received `M x J` measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub y: ComplexMatrix,
    /// Per complex sample; zero only for noiseless test runs.
    pub sigma_sq: f64,
    /// Linear SNR; infinite for noiseless test runs.
    pub tau: f64,
}

/// `Y = H X + N` at the configuration's SNR.
pub fn transmit<R: Rng + ?Sized>(
    frame: &Frame,
    channel: &ChannelMatrix,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    transmit_with_noise(frame, channel, noise_variance_for_snr(cfg), cfg.tau(), rng)
}

/// `Y = H X + N` with an explicit noise variance (zero for a noiseless run).
pub fn transmit_with_noise<R: Rng + ?Sized>(
    frame: &Frame,
    channel: &ChannelMatrix,
    sigma_sq: f64,
    tau: f64,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    let noise = sample_noise(channel.effective().rows(), frame.slots(), sigma_sq, rng);
    let y = channel.effective().matmul(frame.symbols())?.add(&noise)?;
    Ok(ReceivedFrame { y, sigma_sq, tau })
}

pub fn sample_noise<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    sigma_sq: f64,
    rng: &mut R,
) -> ComplexMatrix {
    if sigma_sq == 0.0 {
        return ComplexMatrix::zeros(rows, cols);
    }
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, sigma_sq))
}

/// One complete realisation: spreading, channel, frame, noise and measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub spreading: SpreadingMatrix,
    pub channel: ChannelMatrix,
    pub frame: Frame,
    pub noise: ComplexMatrix,
    pub received: ReceivedFrame,
}

impl Scenario {
    /// Realisation for `trial_seed`; the spreading matrix comes from the
    /// configuration seed and is shared by every trial.
    pub fn generate(cfg: &SystemConfig, spreading: &SpreadingMatrix, trial_seed: u64) -> Result<Self> {
        let sigma_sq = noise_variance_for_snr(cfg);
        Self::generate_with_noise(cfg, spreading, trial_seed, sigma_sq)
    }

    pub fn generate_with_noise(
        cfg: &SystemConfig,
        spreading: &SpreadingMatrix,
        trial_seed: u64,
        sigma_sq: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        if (spreading.subcarriers, spreading.users) != (cfg.subcarriers, cfg.users) {
            return Err(Error::ShapeMismatch(format!(
                "spreading {}x{} for M={} K={}",
                spreading.subcarriers, spreading.users, cfg.subcarriers, cfg.users
            )));
        }
        let channel = sample_channel(spreading, &mut stream_rng(trial_seed, Stream::Channel));
        let frame = sample_frame(cfg, &mut stream_rng(trial_seed, Stream::Data))?;
        let noise = sample_noise(
            cfg.subcarriers,
            cfg.slots,
            sigma_sq,
            &mut stream_rng(trial_seed, Stream::Noise),
        );
        let y = channel.effective().matmul(frame.symbols())?.add(&noise)?;
        let tau = if sigma_sq == 0.0 { f64::INFINITY } else { cfg.tau() };
        let received = ReceivedFrame { y, sigma_sq, tau };
        Ok(Self { config: *cfg, spreading: spreading.clone(), channel, frame, noise, received })
    }
}
