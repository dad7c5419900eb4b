use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("validation error: {0}")]
    Validation(String),

    /// A least-squares system lost full column rank. `column` is the position
    /// (in factorization order) of the offending diagonal entry of R.
    #[error("singular system: |R[{column},{column}]| = {diag:e} is below the rank tolerance")]
    Singular { column: usize, diag: f64 },

    #[error("capacity exceeded: C({n},{k}) = {subsets} subsets exceeds the enumeration budget of {budget}")]
    Capacity {
        n: usize,
        k: usize,
        subsets: u128,
        budget: u128,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// A theorem-backed guarantee was contradicted. This always indicates a bug.
    #[error("guarantee violation: {0}")]
    GuaranteeViolation(String),

    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code used by the command-line front end. Unreadable or
    /// malformed input counts as a validation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            Error::GuaranteeViolation(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
