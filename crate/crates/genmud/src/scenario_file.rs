//! JSON fixtures holding one complete realisation.

use std::path::Path;

use genmud_core::linalg::ComplexMatrix;
use genmud_core::num_complex::Complex64;
use genmud_core::system::{ChannelMatrix, Frame, ReceivedFrame, Scenario, SpreadingMatrix, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub users: usize,
    pub subcarriers: usize,
    pub slots: usize,
    pub active: usize,
    pub snr_db: f64,
    pub seed: u64,
}

/// Complex matrices are stored row-major as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub config: ScenarioConfig,
    pub spreading_sequence: Vec<i8>,
    pub gains: Vec<[f64; 2]>,
    pub frame: Vec<[f64; 2]>,
    pub noise: Vec<[f64; 2]>,
    pub sigma_sq: f64,
    /// Linear SNR; absent for a noiseless realisation.
    pub tau: Option<f64>,
}

fn pairs(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.row_major().iter().map(|c| [c.re, c.im]).collect()
}

fn matrix(rows: usize, cols: usize, v: &[[f64; 2]]) -> Result<ComplexMatrix> {
    Ok(ComplexMatrix::from_row_major(rows, cols, v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())?)
}

impl ScenarioFile {
    pub fn from_scenario(sc: &Scenario) -> Self {
        let c = &sc.config;
        Self {
            version: SCENARIO_VERSION,
            config: ScenarioConfig {
                users: c.users,
                subcarriers: c.subcarriers,
                slots: c.slots,
                active: c.active,
                snr_db: c.snr_db,
                seed: c.seed,
            },
            spreading_sequence: sc.spreading.sequence().to_vec(),
            gains: pairs(sc.channel.gains()),
            frame: pairs(sc.frame.symbols()),
            noise: pairs(&sc.noise),
            sigma_sq: sc.received.sigma_sq,
            tau: sc.received.tau.is_finite().then_some(sc.received.tau),
        }
    }

    /// Rebuilds the realisation; `Y` is recomputed as `H X + N`.
    pub fn to_scenario(&self) -> Result<Scenario> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::VersionMismatch(format!(
                "scenario version {} (expected {SCENARIO_VERSION})",
                self.version
            )));
        }
        let c = &self.config;
        let config = SystemConfig {
            users: c.users,
            subcarriers: c.subcarriers,
            slots: c.slots,
            active: c.active,
            snr_db: c.snr_db,
            seed: c.seed,
        };
        config.validate()?;
        let spreading = SpreadingMatrix::from_sequence(c.subcarriers, c.users, self.spreading_sequence.clone())?;
        let channel = ChannelMatrix::from_gains(matrix(c.subcarriers, c.users, &self.gains)?, &spreading)?;
        let frame = Frame::from_symbols(matrix(c.users, c.slots, &self.frame)?);
        let noise = matrix(c.subcarriers, c.slots, &self.noise)?;
        let y = channel.effective().matmul(frame.symbols())?.add(&noise)?;
        let received = ReceivedFrame { y, sigma_sq: self.sigma_sq, tau: self.tau.unwrap_or(f64::INFINITY) };
        Ok(Scenario { config, spreading, channel, frame, noise, received })
    }
}

pub fn save_scenario(sc: &Scenario, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&ScenarioFile::from_scenario(sc)).expect("scenario serialises");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| Error::config(path, e.to_string()))?;
    file.to_scenario()
}
