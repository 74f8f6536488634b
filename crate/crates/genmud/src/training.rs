use std::io::Write;
use std::path::Path;

use genmud_core::genmud::{train, SimulatedTasks, Trained, TrainingLog};

use crate::config::{output_path, TrainSpec};
use crate::error::{Error, Result};
use crate::model_file::save_model;

/// Trains per the spec, then writes the model and the loss curve. On
/// divergence the partial loss curve is still written before the error is
/// returned.
pub fn run_training(spec: &TrainSpec) -> Result<Trained> {
    let cfg = spec.train_config();
    let log_path = output_path(&spec.log);
    match train(&SimulatedTasks::new(&cfg.system), &cfg) {
        Ok(trained) => {
            save_model(&trained.model, &output_path(&spec.model))?;
            write_log_file(&trained.log, &log_path)?;
            Ok(trained)
        }
        Err(failure) => {
            write_log_file(&failure.log, &log_path)?;
            Err(failure.error.into())
        }
    }
}

/// `step,l_g,l_h,alpha`, one row per outer step.
pub fn write_log<W: Write>(log: &TrainingLog, mut out: W) -> std::io::Result<()> {
    writeln!(out, "step,l_g,l_h,alpha")?;
    for (i, e) in log.steps.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", e.l_g, e.l_h, e.alpha)?;
    }
    out.flush()
}

pub fn write_log_file(log: &TrainingLog, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_log(log, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
