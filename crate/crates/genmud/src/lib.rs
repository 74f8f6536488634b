//! File formats, experiment sweeps and training orchestration for
//! `genmud-core`. The `genmud` binary wraps these behind four verbs:
//! `train`, `sweep`, `estimate` and `plotdata`.

pub mod config;
pub mod error;
pub mod estimate;
pub mod model_file;
pub mod plot;
pub mod scenario_file;
pub mod sweep;
pub mod training;

pub use error::{Error, Result};
