use std::io;

use otoc_core::OtocError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] OtocError),

    #[error("validity warnings escalated by --strict:\n  {}", .0.join("\n  "))]
    Strict(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                OtocError::InvalidParameter(_)
                | OtocError::OrderOutOfRange(_)
                | OtocError::LevelOutOfRange { .. } => 2,
                OtocError::TruncationTooSmall { .. }
                | OtocError::NonConvergence { .. }
                | OtocError::NonPositiveValue { .. }
                | OtocError::SeriesTooShort { .. } => 3,
            },
            CliError::Strict(_) => 4,
        }
    }

    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
