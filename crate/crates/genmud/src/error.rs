use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("model version mismatch: {0}")]
    VersionMismatch(String),
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("unknown figure id {0:?} (expected one of fig2, fig3, fig4, fig5, fig7)")]
    UnknownFigure(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] genmud_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// Process exit status: 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        use genmud_core::Error as E;
        match self {
            Error::Core(E::NonFinite(_) | E::RankDeficient { .. } | E::DivergedTraining { .. }) => 3,
            _ => 2,
        }
    }
}
