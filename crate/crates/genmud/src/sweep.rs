//! Monte Carlo sweeps over a scenario grid.

use std::io::Write;
use std::path::Path;

use genmud_core::baselines::{bpdn_recover, default_bpdn_lambda, oracle_ls, somp_detect, RecoverySettings};
use genmud_core::genmud::{genmud_detect, GeneratorModel};
use genmud_core::metrics::{count_errors, normalized_error, ErrorCounts};
use genmud_core::rng::{derive_seed, stream_rng, Stream};
use genmud_core::sparsity::estimate_sparsity;
use genmud_core::system::{Frame, Scenario, SpreadingMatrix, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Detector, ExperimentSpec, GridPoint, SparsitySource};
use crate::error::{Error, Result};
use crate::model_file::load_model_for;

pub const CSV_HEADER: [&str; 11] = ["snr_db", "S", "M", "J", "detector", "trials", "ser", "pd", "pfa", "en", "seed"];

/// One CSV row. The header is `snr_db,S,M,J,detector,trials,ser,pd,pfa,en,seed`;
/// `en` is empty when the true sparsity is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub snr_db: f64,
    #[serde(rename = "S")]
    pub active: usize,
    #[serde(rename = "M")]
    pub subcarriers: usize,
    #[serde(rename = "J")]
    pub slots: usize,
    pub detector: String,
    pub trials: usize,
    pub ser: f64,
    pub pd: f64,
    pub pfa: f64,
    pub en: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: GridPoint,
    pub detector: Detector,
    pub trials: usize,
    pub counts: ErrorCounts,
    /// Mean normalised sparsity error over the trials, when estimating.
    pub en: Option<f64>,
    pub seed: u64,
}

impl SweepRow {
    pub fn csv(&self) -> CsvRow {
        CsvRow {
            snr_db: self.point.snr_db,
            active: self.point.active,
            subcarriers: self.point.subcarriers,
            slots: self.point.slots,
            detector: self.detector.name().to_string(),
            trials: self.trials,
            ser: self.counts.ser(),
            pd: self.counts.pd(),
            pfa: self.counts.pfa(),
            en: self.en,
            seed: self.seed,
        }
    }
}

struct TrialResult {
    counts: Vec<ErrorCounts>,
    en: f64,
}

/// Everything a detector needs besides the model.
pub struct DetectorContext<'a> {
    pub spec: &'a ExperimentSpec,
    pub model: Option<&'a GeneratorModel>,
}

impl DetectorContext<'_> {
    /// Runs one detector on a realisation with the given sparsity.
    pub fn detect(&self, detector: Detector, sc: &Scenario, sparsity: usize, trial_seed: u64) -> Result<Frame> {
        let y = &sc.received.y;
        let h = sc.channel.effective();
        let mut settings = RecoverySettings::new(sparsity);
        settings.max_iters = self.spec.max_iters;
        Ok(match detector {
            Detector::OracleLs => oracle_ls(y, h, sc.frame.support())?,
            Detector::Somp => somp_detect(y, h, &settings)?.frame,
            Detector::Bpdn => {
                settings.bpdn_lambda = self
                    .spec
                    .bpdn_lambda
                    .unwrap_or_else(|| default_bpdn_lambda(h, sc.received.sigma_sq, h.cols()));
                bpdn_recover(y, h, &settings)?.frame
            }
            Detector::Genmud => {
                let model = self.model.expect("validated: genmud has a model");
                let mut rng = stream_rng(trial_seed, Stream::Latent);
                genmud_detect(model, y, h, sparsity, self.spec.inner_steps, self.spec.selection.into(), &mut rng)?
            }
        })
    }
}

fn system_config(spec: &ExperimentSpec, p: &GridPoint) -> SystemConfig {
    SystemConfig {
        users: spec.users,
        subcarriers: p.subcarriers,
        slots: p.slots,
        active: p.active,
        snr_db: p.snr_db,
        seed: spec.seed,
    }
}

fn run_trial(
    ctx: &DetectorContext<'_>,
    cfg: &SystemConfig,
    spreading: &SpreadingMatrix,
    trial_seed: u64,
) -> Result<TrialResult> {
    let spec = ctx.spec;
    let sc = if spec.noiseless {
        Scenario::generate_with_noise(cfg, spreading, trial_seed, 0.0)?
    } else {
        Scenario::generate(cfg, spreading, trial_seed)?
    };
    let estimate = estimate_sparsity(&sc.received.y, cfg.tau())?;
    let sparsity = match spec.sparsity {
        SparsitySource::Known => cfg.active,
        SparsitySource::Estimated => estimate.for_detector(cfg.users),
    };
    let counts = spec
        .detectors
        .iter()
        .map(|&d| count_errors(&sc.frame, &ctx.detect(d, &sc, sparsity, trial_seed)?).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialResult { counts, en: normalized_error(cfg.active, estimate.s_hat) })
}

/// Runs every grid point and detector. Trials run in parallel; counts are
/// merged in trial order so the result does not depend on scheduling.
pub fn run_sweep(spec: &ExperimentSpec, model: Option<&GeneratorModel>) -> Result<Vec<SweepRow>> {
    spec.validate().map_err(|m| Error::config("<spec>", m))?;
    let ctx = DetectorContext { spec, model };
    let mut rows = Vec::new();
    for (index, point) in spec.grid.points().iter().enumerate() {
        let cfg = system_config(spec, point);
        if let (Some(m), true) = (model, spec.detectors.contains(&Detector::Genmud)) {
            if (m.arch.users, m.arch.slots) != (cfg.users, cfg.slots) {
                return Err(Error::VersionMismatch(format!(
                    "model is for K={} J={}, grid point has K={} J={}",
                    m.arch.users, m.arch.slots, cfg.users, cfg.slots
                )));
            }
        }
        let spreading = SpreadingMatrix::for_config(&cfg);
        let trials: Vec<TrialResult> = (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(&ctx, &cfg, &spreading, derive_seed(spec.seed, index as u64, t as u64)))
            .collect::<Result<_>>()?;
        let en = match spec.sparsity {
            SparsitySource::Known => None,
            SparsitySource::Estimated => Some(trials.iter().map(|t| t.en).sum::<f64>() / trials.len() as f64),
        };
        for (d, &detector) in spec.detectors.iter().enumerate() {
            let mut counts = ErrorCounts::default();
            for t in &trials {
                counts.merge(&t.counts[d]);
            }
            rows.push(SweepRow { point: *point, detector, trials: spec.trials, counts, en, seed: spec.seed });
        }
    }
    Ok(rows)
}

/// Loads the model named by the spec (if any) and runs the sweep.
pub fn run_sweep_with_model_file(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    let model = match &spec.model {
        Some(path) => Some(load_model_for(path, spec.users, spec.grid.slots[0])?),
        None => None,
    };
    run_sweep(spec, model.as_ref())
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r.csv())?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv_file(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
