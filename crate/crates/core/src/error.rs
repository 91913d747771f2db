use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum EmcError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("pair is not controllable (rank {rank} < {n})")]
    Uncontrollable { rank: usize, n: usize },

    #[error("pair is not observable (rank {rank} < {n})")]
    Unobservable { rank: usize, n: usize },

    #[error("polynomial degree {found} does not match state dimension {expected}")]
    DegreeMismatch { expected: usize, found: usize },

    #[error("frequency response singular at f = {f_hz} Hz (pole on the unit circle)")]
    Singular { f_hz: f64 },

    #[error("linear system is rank deficient: rank {rank} of {unknowns} unknowns, residual {residual:e}")]
    RankDeficient {
        rank: usize,
        unknowns: usize,
        residual: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("multi-rate schedule violated: {0}")]
    Schedule(String),

    #[error("infeasible reference request: {0}")]
    Infeasible(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EmcError>;

pub(crate) fn dim_err(context: &'static str, expected: impl ToString, found: impl ToString) -> EmcError {
    EmcError::DimensionMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
