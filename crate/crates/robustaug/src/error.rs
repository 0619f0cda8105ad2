use std::path::PathBuf;

use robustaug_core::Error as CoreError;

use crate::pnm::PnmError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Pnm { path: PathBuf, source: PnmError },
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short stable category name for the one-line CLI error.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Core(e) => e.category(),
            Error::Io { .. } => "io",
            Error::Pnm { .. } => "image-format",
            Error::Config(_) => "config",
            Error::Checkpoint(_) => "checkpoint",
            Error::Schema(_) => "schema",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
