//! TOML experiment descriptions.
//!
//! Relative output paths are resolved against `GENMUD_OUT_DIR` when it is set.

use std::path::{Path, PathBuf};

use genmud_core::genmud::{MamlMode, Selection, TrainConfig};
use genmud_core::system::SystemConfig;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};

pub const OUT_DIR_VAR: &str = "GENMUD_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Genmud,
    Somp,
    Bpdn,
    OracleLs,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Genmud => "genmud",
            Detector::Somp => "somp",
            Detector::Bpdn => "bpdn",
            Detector::OracleLs => "oracle_ls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsitySource {
    #[default]
    Known,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Joint,
    PerSlot,
}

impl From<SelectionMode> for Selection {
    fn from(s: SelectionMode) -> Self {
        match s {
            SelectionMode::Joint => Selection::Joint,
            SelectionMode::PerSlot => Selection::PerSlot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub snr_db: Vec<f64>,
    pub active: Vec<usize>,
    pub subcarriers: Vec<usize>,
    pub slots: Vec<usize>,
}

impl Grid {
    /// Points in row-major order over (SNR, S, M, J).
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &snr_db in &self.snr_db {
            for &active in &self.active {
                for &subcarriers in &self.subcarriers {
                    for &slots in &self.slots {
                        out.push(GridPoint { snr_db, active, subcarriers, slots });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub snr_db: f64,
    pub active: usize,
    pub subcarriers: usize,
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub users: usize,
    pub grid: Grid,
    pub detectors: Vec<Detector>,
    pub trials: usize,
    #[serde(default)]
    pub sparsity: SparsitySource,
    pub model: Option<PathBuf>,
    pub seed: u64,
    pub output: PathBuf,
    /// Latent steps used by the generative detector.
    #[serde(default = "default_inner_steps")]
    pub inner_steps: usize,
    #[serde(default)]
    pub selection: SelectionMode,
    /// Drop the noise entirely (the SNR is then only used for the estimator).
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub bpdn_lambda: Option<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_inner_steps() -> usize {
    20
}

fn default_max_iters() -> usize {
    2000
}

impl ExperimentSpec {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let g = &self.grid;
        if g.snr_db.is_empty() || g.active.is_empty() || g.subcarriers.is_empty() || g.slots.is_empty() {
            return Err("every grid axis needs at least one value".into());
        }
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        if self.detectors.is_empty() {
            return Err("no detectors selected".into());
        }
        let wants_model = self.detectors.contains(&Detector::Genmud);
        match (wants_model, &self.model) {
            (true, None) => return Err("detector genmud needs `model`".into()),
            (false, Some(_)) => return Err("`model` given but genmud is not among the detectors".into()),
            _ => {}
        }
        for p in g.points() {
            SystemConfig {
                users: self.users,
                subcarriers: p.subcarriers,
                slots: p.slots,
                active: p.active,
                snr_db: p.snr_db,
                seed: self.seed,
            }
            .validate()
            .map_err(|e| e.to_string())?;
            if p.active == self.users {
                return Err(format!("S = K = {} leaves no inactive users", self.users));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MamlModeName {
    #[default]
    FirstOrder,
    FullUnroll,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub users: usize,
    pub subcarriers: usize,
    pub slots: usize,
    pub active: usize,
    pub snr_db: f64,
    pub seed: u64,
    #[serde(default = "default_inner_steps")]
    pub inner_steps: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    pub max_steps: usize,
    #[serde(default = "default_alpha")]
    pub alpha_init: f64,
    #[serde(default = "default_hidden")]
    pub hidden1: usize,
    #[serde(default = "default_hidden")]
    pub hidden2: usize,
    #[serde(default)]
    pub dataset_size: usize,
    #[serde(default)]
    pub maml_mode: MamlModeName,
    pub model: PathBuf,
    pub log: PathBuf,
}

fn default_batch() -> usize {
    32
}

fn default_lr() -> f64 {
    1e-4
}

fn default_alpha() -> f64 {
    0.01
}

fn default_hidden() -> usize {
    64
}

impl TrainSpec {
    pub fn train_config(&self) -> TrainConfig {
        let system = SystemConfig {
            users: self.users,
            subcarriers: self.subcarriers,
            slots: self.slots,
            active: self.active,
            snr_db: self.snr_db,
            seed: self.seed,
        };
        TrainConfig {
            system,
            hidden1: self.hidden1,
            hidden2: self.hidden2,
            dataset_size: self.dataset_size,
            inner_steps: self.inner_steps,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            max_steps: self.max_steps,
            alpha_init: self.alpha_init,
            maml_mode: match self.maml_mode {
                MamlModeName::FirstOrder => MamlMode::FirstOrder,
                MamlModeName::FullUnroll => MamlMode::FullUnroll,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub users: usize,
    pub active: usize,
    pub subcarriers: Vec<usize>,
    pub slots: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub output: PathBuf,
}

/// Reads and deserialises a TOML file. Errors carry the path plus the
/// line, column and field reported by the parser.
pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_toml(&text, path)
}

pub fn parse_toml<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::config(path, e.to_string().trim_end().to_string()))
}

pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec = read_toml(path)?;
    spec.validate().map_err(|m| Error::config(path, m))?;
    Ok(spec)
}

pub fn load_train(path: &Path) -> Result<TrainSpec> {
    let spec: TrainSpec = read_toml(path)?;
    spec.train_config().validate().map_err(|e| Error::config(path, e.to_string()))?;
    Ok(spec)
}

pub fn load_estimate(path: &Path) -> Result<EstimateSpec> {
    let spec: EstimateSpec = read_toml(path)?;
    if spec.trials == 0 || spec.subcarriers.is_empty() || spec.slots.is_empty() || spec.snr_db.is_empty() {
        return Err(Error::config(path, "trials and every grid axis must be non-empty"));
    }
    Ok(spec)
}

/// `path` itself if absolute, otherwise joined onto `GENMUD_OUT_DIR` when set.
pub fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}
