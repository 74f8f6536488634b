//! Meta-learned training of the generator and its latent step size.
//!
//! Each outer step draws a batch of simulated frames, runs the inner latent
//! descent on the whole batch at once (batch-norm statistics are pooled over
//! all users of all frames), and updates `θ` and `α` with Adam on
//! `L_G + L_H`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::system::{Scenario, SpreadingMatrix, SystemConfig};

use super::latent::{matrix_to_output, LatentPoint, Measurement};
use super::network::{Architecture, GeneratorModel, Mode};
use super::rip::rip_terms;
use super::scalar::{Dual, Scalar};

/// Lower bound kept on `α` after every update.
pub const MIN_STEP_SIZE: f64 = 1e-6;

/// Point index reserved for training draws in [`derive_seed`].
const TRAIN_POINT: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MamlMode {
    /// The inner trajectory is held fixed; only the final generator
    /// applications are differentiated.
    #[default]
    FirstOrder,
    /// Exact gradient through every inner step.
    FullUnroll,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Problem dimensions, training SNR and master seed.
    pub system: SystemConfig,
    pub hidden1: usize,
    pub hidden2: usize,
    /// Number of distinct training frames `N_d`; 0 draws a fresh frame every time.
    pub dataset_size: usize,
    /// Inner latent steps `T`.
    pub inner_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_steps: usize,
    pub alpha_init: f64,
    pub maml_mode: MamlMode,
}

impl TrainConfig {
    pub fn new(system: SystemConfig) -> Self {
        Self {
            system,
            hidden1: Architecture::DEFAULT_HIDDEN,
            hidden2: Architecture::DEFAULT_HIDDEN,
            dataset_size: 0,
            inner_steps: 20,
            batch_size: 32,
            learning_rate: 1e-4,
            max_steps: 1000,
            alpha_init: 0.01,
            maml_mode: MamlMode::FirstOrder,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture::new(self.system.users, self.system.slots).with_hidden(self.hidden1, self.hidden2)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.architecture().validate()?;
        if self.inner_steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("inner steps and batch size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !(self.alpha_init > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!(
                "need learning rate >= 0 and alpha > 0, got {} and {}",
                self.learning_rate,
                self.alpha_init
            )));
        }
        Ok(())
    }
}

/// One training frame: what the receiver sees plus the transmitted symbols
/// in generator layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub meas: Measurement,
    pub truth: Vec<f64>,
}

impl Task {
    pub fn from_scenario(sc: &Scenario) -> Result<Self> {
        Ok(Self {
            meas: Measurement::new(&sc.received.y, sc.channel.effective())?,
            truth: matrix_to_output(sc.frame.symbols()),
        })
    }
}

/// Supplies training frames by index.
pub trait TaskSource {
    fn task(&self, index: u64) -> Result<Task>;
}

/// Frames simulated from a system configuration with a fixed spreading matrix.
#[derive(Debug, Clone)]
pub struct SimulatedTasks {
    cfg: SystemConfig,
    spreading: SpreadingMatrix,
}

impl SimulatedTasks {
    pub fn new(cfg: &SystemConfig) -> Self {
        Self { cfg: *cfg, spreading: SpreadingMatrix::for_config(cfg) }
    }
}

impl TaskSource for SimulatedTasks {
    fn task(&self, index: u64) -> Result<Task> {
        let sc = Scenario::generate(&self.cfg, &self.spreading, derive_seed(self.cfg.seed, TRAIN_POINT, index))?;
        Task::from_scenario(&sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub l_g: f64,
    pub l_h: f64,
    /// Step size after the update.
    pub alpha: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub steps: Vec<LogEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: GeneratorModel,
    pub log: TrainingLog,
}

/// Training stopped; the log up to that point is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFailure {
    pub error: Error,
    pub log: TrainingLog,
}

impl From<Error> for TrainFailure {
    fn from(error: Error) -> Self {
        Self { error, log: TrainingLog::default() }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t = self.t.saturating_add(1);
        let c1 = 1.0 - Float::powi(self.beta1, self.t);
        let c2 = 1.0 - Float::powi(self.beta2, self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (Float::sqrt(v_hat) + self.eps);
        }
    }
}

/// Batch statistics of both normalisation layers.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean1: Vec<f64>,
    pub var1: Vec<f64>,
    pub mean2: Vec<f64>,
    pub var2: Vec<f64>,
    /// Number of positions the statistics were pooled over.
    pub count: usize,
}

/// Outer loss at fixed start and end latents.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointLoss {
    pub l_g: f64,
    pub l_h: f64,
    /// Gradient in the end latent.
    pub d_latent: Vec<f64>,
    /// Gradient in `θ` through both generator applications.
    pub d_params: Vec<f64>,
    pub stats: BatchStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaGradient {
    pub l_g: f64,
    pub l_h: f64,
    pub d_params: Vec<f64>,
    pub d_alpha: f64,
    /// Latent after the inner descent, concatenated over the batch.
    pub z_final: Vec<f64>,
    pub stats: BatchStats,
}

/// Summed misfit over the batch and its gradient in the concatenated output.
fn batch_misfit<T: Scalar>(tasks: &[Task], out: &[T]) -> (T, Vec<T>) {
    let n = tasks[0].meas.output_len();
    let mut total = T::zero();
    let mut grad = Vec::with_capacity(out.len());
    for (task, chunk) in tasks.iter().zip(out.chunks(n)) {
        let (l, g) = task.meas.loss_grad(chunk);
        total += l;
        grad.extend(g);
    }
    (total, grad)
}

fn check_batch(model: &GeneratorModel, tasks: &[Task], z: &[f64]) {
    assert!(!tasks.is_empty(), "empty batch");
    assert_eq!(z.len(), tasks.len() * model.arch.latent_len(), "batch latent length");
    for t in tasks {
        assert_eq!(t.meas.users(), model.arch.users, "task users");
        assert_eq!(t.meas.slots(), model.arch.slots, "task slots");
    }
}

/// Gradient of the summed batch misfit in the concatenated latent, training mode.
pub fn batch_latent_grad(model: &GeneratorModel, tasks: &[Task], z: &[f64]) -> (f64, Vec<f64>) {
    let fwd = model.forward(z, Mode::Train);
    let (loss, dout) = batch_misfit(tasks, &fwd.out);
    (loss, model.backward(&fwd, &dout, false).0)
}

/// `z_T` from `z_0` by `steps` inner steps on the batch.
pub fn inner_descent(model: &GeneratorModel, tasks: &[Task], z0: &[f64], steps: usize) -> Vec<f64> {
    let mut z = z0.to_vec();
    for _ in 0..steps {
        let (_, g) = batch_latent_grad(model, tasks, &z);
        for (zi, gi) in z.iter_mut().zip(&g) {
            *zi -= model.alpha * gi;
        }
    }
    z
}

/// `L_G + L_H` evaluated at a start latent `z0` and end latent `zt`, with
/// gradients in `zt` and `θ`.
///
/// `L_G` is the batch mean of `‖Y − H G(z_T)‖²`; `L_H` is the batch mean of
/// the isometry penalty over (true, `G(z₀)`), (true, `G(z_T)`),
/// (`G(z₀)`, `G(z_T)`).
pub fn endpoint_loss(model: &GeneratorModel, tasks: &[Task], z0: &[f64], zt: &[f64]) -> EndpointLoss {
    check_batch(model, tasks, z0);
    check_batch(model, tasks, zt);
    let inv_b = 1.0 / tasks.len() as f64;
    let n = tasks[0].meas.output_len();
    let fwd_t = model.forward(zt, Mode::Train);
    let fwd_0 = model.forward(z0, Mode::Train);
    let (sum_g, mut d_after) = batch_misfit(tasks, &fwd_t.out);
    for v in &mut d_after {
        *v *= inv_b;
    }
    let mut d_before = vec![0.0; d_after.len()];
    let mut l_h = 0.0;
    for (b, task) in tasks.iter().enumerate() {
        let range = b * n..(b + 1) * n;
        let (l, db, da) = rip_terms(&task.meas, &task.truth, &fwd_0.out[range.clone()], &fwd_t.out[range.clone()]);
        l_h += l * inv_b;
        for (dst, v) in d_before[range.clone()].iter_mut().zip(&db) {
            *dst += v * inv_b;
        }
        for (dst, v) in d_after[range].iter_mut().zip(&da) {
            *dst += v * inv_b;
        }
    }
    let (d_latent, dp_t) = model.backward(&fwd_t, &d_after, true);
    let (_, dp_0) = model.backward(&fwd_0, &d_before, true);
    let d_params = dp_t.unwrap().iter().zip(&dp_0.unwrap()).map(|(a, b)| a + b).collect();
    let stats = BatchStats {
        mean1: fwd_t.block1.mean.clone(),
        var1: fwd_t.block1.var.clone(),
        mean2: fwd_t.block2.mean.clone(),
        var2: fwd_t.block2.var.clone(),
        count: zt.len() / model.arch.in_channels(),
    };
    EndpointLoss { l_g: sum_g * inv_b, l_h, d_latent, d_params, stats }
}

/// Outer loss after running the inner descent from `z0`, value only.
pub fn unrolled_loss(model: &GeneratorModel, tasks: &[Task], z0: &[f64], steps: usize) -> (f64, f64) {
    let zt = inner_descent(model, tasks, z0, steps);
    let e = endpoint_loss(model, tasks, z0, &zt);
    (e.l_g, e.l_h)
}

/// Gradient of `L_G + L_H` in `θ` and `α` for one batch.
pub fn meta_gradient(
    model: &GeneratorModel,
    tasks: &[Task],
    z0: &[f64],
    steps: usize,
    mode: MamlMode,
) -> MetaGradient {
    check_batch(model, tasks, z0);
    let alpha = model.alpha;
    let mut trajectory = Vec::new();
    // Tangent dz_t/dα, carried forward with Hessian-vector products.
    let mut tangent = vec![0.0; z0.len()];
    let mut z = z0.to_vec();
    for _ in 0..steps {
        match mode {
            MamlMode::FirstOrder => {
                let seeded: Vec<Dual> = z.iter().zip(&tangent).map(|(&v, &d)| Dual::new(v, d)).collect();
                let fwd = model.forward(&seeded, Mode::Train);
                let (_, dout) = batch_misfit(tasks, &fwd.out);
                let (g, _) = model.backward(&fwd, &dout, false);
                for ((zi, ti), gi) in z.iter_mut().zip(&mut tangent).zip(&g) {
                    *zi -= alpha * gi.v;
                    *ti -= gi.v + alpha * gi.d;
                }
            }
            MamlMode::FullUnroll => {
                let (_, g) = batch_latent_grad(model, tasks, &z);
                trajectory.push(z.clone());
                for (zi, gi) in z.iter_mut().zip(&g) {
                    *zi -= alpha * gi;
                }
            }
        }
    }
    let end = endpoint_loss(model, tasks, z0, &z);
    let mut d_params = end.d_params;
    let d_alpha = match mode {
        MamlMode::FirstOrder => dot(&end.d_latent, &tangent),
        MamlMode::FullUnroll => {
            let mut lambda = end.d_latent;
            let mut d_alpha = 0.0;
            for zt in trajectory.iter().rev() {
                // Seeding the latent with λ makes the dual parts of the
                // gradients the Hessian-vector products H_zz λ and H_θz λ.
                let seeded: Vec<Dual> = zt.iter().zip(&lambda).map(|(&v, &d)| Dual::new(v, d)).collect();
                let fwd = model.forward(&seeded, Mode::Train);
                let (_, dout) = batch_misfit(tasks, &fwd.out);
                let (gz, gp) = model.backward(&fwd, &dout, true);
                d_alpha -= gz.iter().zip(&lambda).map(|(g, l)| g.v * l).sum::<f64>();
                for (dp, g) in d_params.iter_mut().zip(gp.unwrap()) {
                    *dp -= alpha * g.d;
                }
                for (l, g) in lambda.iter_mut().zip(&gz) {
                    *l -= alpha * g.d;
                }
            }
            d_alpha
        }
    };
    MetaGradient { l_g: end.l_g, l_h: end.l_h, d_params, d_alpha, z_final: z, stats: end.stats }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standardised starting latents for a batch, concatenated.
pub fn sample_batch_latent<R: Rng + ?Sized>(latent_len: usize, batch: usize, rng: &mut R) -> Vec<f64> {
    (0..batch).flat_map(|_| LatentPoint::sample(latent_len, rng).z).collect()
}

/// Initialises a model from the config seed and trains it.
pub fn train<S: TaskSource + ?Sized>(source: &S, cfg: &TrainConfig) -> Result<Trained, TrainFailure> {
    cfg.validate()?;
    let mut init_rng = stream_rng(cfg.system.seed, Stream::Init);
    let model = GeneratorModel::init(cfg.architecture(), cfg.alpha_init, &mut init_rng)?;
    train_from(model, source, cfg)
}

/// Continues training an existing model.
pub fn train_from<S: TaskSource + ?Sized>(
    mut model: GeneratorModel,
    source: &S,
    cfg: &TrainConfig,
) -> Result<Trained, TrainFailure> {
    cfg.validate()?;
    if model.arch.users != cfg.system.users || model.arch.slots != cfg.system.slots {
        return Err(Error::ShapeMismatch(alloc::format!(
            "model is K={} J={}, config is K={} J={}",
            model.arch.users,
            model.arch.slots,
            cfg.system.users,
            cfg.system.slots
        ))
        .into());
    }
    model.validate()?;
    let seed = cfg.system.seed;
    let mut latent_rng = stream_rng(seed, Stream::Latent);
    let mut index_rng = stream_rng(derive_seed(seed, TRAIN_POINT, 0), Stream::Data);
    let n_params = model.params.len();
    let mut adam = Adam::new(n_params + 1, cfg.learning_rate);
    let mut state = vec![0.0; n_params + 1];
    let mut grad = vec![0.0; n_params + 1];
    let mut log = TrainingLog::default();
    let mut fresh = 0u64;

    for step in 0..cfg.max_steps {
        let mut tasks = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let index = if cfg.dataset_size > 0 {
                index_rng.random_range(0..cfg.dataset_size as u64)
            } else {
                fresh += 1;
                fresh - 1
            };
            match source.task(index) {
                Ok(t) => tasks.push(t),
                Err(error) => return Err(TrainFailure { error, log }),
            }
        }
        let z0 = sample_batch_latent(model.arch.latent_len(), cfg.batch_size, &mut latent_rng);
        let mg = meta_gradient(&model, &tasks, &z0, cfg.inner_steps, cfg.maml_mode);
        let finite = mg.l_g.is_finite()
            && mg.l_h.is_finite()
            && mg.d_alpha.is_finite()
            && mg.d_params.iter().all(|v| v.is_finite());
        if !finite {
            return Err(TrainFailure { error: Error::DivergedTraining { step }, log });
        }
        state[..n_params].copy_from_slice(&model.params);
        state[n_params] = model.alpha;
        grad[..n_params].copy_from_slice(&mg.d_params);
        grad[n_params] = mg.d_alpha;
        adam.step(&mut state, &grad);
        model.params.copy_from_slice(&state[..n_params]);
        model.alpha = state[n_params].max(MIN_STEP_SIZE);
        let s = &mg.stats;
        let unbias = if s.count > 1 { s.count as f64 / (s.count - 1) as f64 } else { 1.0 };
        let var1: Vec<f64> = s.var1.iter().map(|v| v * unbias).collect();
        let var2: Vec<f64> = s.var2.iter().map(|v| v * unbias).collect();
        model.update_running_stats(&s.mean1, &var1, &s.mean2, &var2);
        log.steps.push(LogEntry { l_g: mg.l_g, l_h: mg.l_h, alpha: model.alpha });
        if model.params.iter().any(|v| !v.is_finite()) {
            return Err(TrainFailure { error: Error::DivergedTraining { step }, log });
        }
    }
    Ok(Trained { model, log })
}
