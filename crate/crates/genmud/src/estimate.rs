use std::io::Write;
use std::path::Path;

use genmud_core::sparsity::{estimator_error_sweep, EstimatorPoint, EstimatorResult};

use crate::config::EstimateSpec;
use crate::error::{Error, Result};

pub fn run_estimate(spec: &EstimateSpec) -> Result<Vec<EstimatorResult>> {
    let mut grid = Vec::new();
    for &snr_db in &spec.snr_db {
        for &subcarriers in &spec.subcarriers {
            for &slots in &spec.slots {
                grid.push(EstimatorPoint { users: spec.users, subcarriers, slots, active: spec.active, snr_db });
            }
        }
    }
    Ok(estimator_error_sweep(&grid, spec.trials, spec.seed)?)
}

pub fn write_estimate<W: Write>(rows: &[EstimatorResult], seed: u64, mut out: W) -> std::io::Result<()> {
    writeln!(out, "snr_db,S,M,J,trials,en,s_hat_mean,s_hat_std,seed")?;
    for r in rows {
        let p = &r.point;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{seed}",
            p.snr_db, p.active, p.subcarriers, p.slots, r.trials, r.mean_error, r.mean_estimate, r.std_estimate
        )?;
    }
    out.flush()
}

pub fn write_estimate_file(rows: &[EstimatorResult], seed: u64, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_estimate(rows, seed, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
