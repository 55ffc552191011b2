use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] disagree_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("could not read report {path}: {reason}")]
    BadReport { path: PathBuf, reason: String },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io_failure",
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "invalid_config",
            CliError::BadReport { .. } => "invalid_report",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

core_from!(
    disagree_core::IngestError,
    disagree_core::GoldError,
    disagree_core::AdjustError,
    disagree_core::EnsembleError,
    disagree_core::MetricsError
);
