use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resampling weight must be finite and nonnegative, got {0}")]
    InvalidWeight(f64),

    #[error("Metropolis-Hastings chain is off the target support (current target value {0})")]
    OffSupport(f64),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("quadrature did not converge within {0} intervals")]
    QuadratureDiverged(usize),

    #[error("malformed image file {path}: {reason}")]
    ImageFormat { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
