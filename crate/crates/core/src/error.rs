use std::path::PathBuf;

use thiserror::Error;

use crate::oracle::PosteriorSnapshot;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Io,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("{what} {value} out of range (must be < {bound})")]
    Range { what: &'static str, value: u64, bound: u64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Every task in the support assigns probability zero to the observed
    /// symbol. The snapshot computed before conditioning is preserved.
    #[error("impossible evidence: symbol {symbol} at position {position} has zero probability under every task")]
    ImpossibleEvidence { position: usize, symbol: usize, snapshot: Option<Box<PosteriorSnapshot>> },

    #[error("impossible prefix: symbol {symbol} at position {position} has zero probability under task {task}")]
    ImpossiblePrefix { task: u64, position: usize, symbol: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("streams misaligned at sequence {sequence_id}, position {t}: {reason}")]
    Alignment { sequence_id: u64, t: u32, reason: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::ImpossibleEvidence { .. } | Error::ImpossiblePrefix { .. } | Error::Numerical(_) => {
                ErrorCategory::Numerical
            }
            _ => ErrorCategory::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }
}
