use alloc::string::String;

/// Errors raised by the detection and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is rank deficient (smallest/largest singular value {ratio:e} < {tolerance:e})")]
    RankDeficient { ratio: f64, tolerance: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("every user is active, false-alarm probability is undefined")]
    SaturatedSupport,
    #[error("training diverged at outer step {step}: loss is not finite")]
    DivergedTraining { step: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
