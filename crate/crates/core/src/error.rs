use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Each variant maps onto one of the process exit codes used by the
/// `forecast` binary (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("size cap exceeded: {what} would be {size} (cap {cap})")]
    CapExceeded { what: String, size: u128, cap: u128 },

    #[error("minmax solver did not certify: gap {gap:.3e} > tolerance {tol:.3e} after {iterations} iterations")]
    SolverFailure { gap: f64, tol: f64, iterations: usize },

    #[error("adversary script exhausted at round {0}")]
    ScriptExhausted(usize),

    #[error("incomplete transcript: {rounds} of {horizon} rounds")]
    IncompleteTranscript { rounds: usize, horizon: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 config, 3 solver, 4 cap, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SolverFailure { .. } => 3,
            Error::CapExceeded { .. } => 4,
            Error::Io(_) | Error::Csv(_) => 5,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
