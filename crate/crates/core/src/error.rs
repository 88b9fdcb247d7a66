use std::path::PathBuf;

use crate::solver::RunResult;

/// Errors surfaced by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("matrix has no negative curvature (lambda_min = {0})")]
    NoNegativeCurvature(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter infeasible: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("run diverged at iteration {iteration}: {reason}")]
    Divergence {
        iteration: usize,
        reason: String,
        partial: Box<RunResult>,
    },

    #[error("not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trace error: {0}")]
    Trace(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 runtime/divergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Infeasible(_) => 2,
            Error::NotFound(_) | Error::Io { .. } | Error::Trace(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
