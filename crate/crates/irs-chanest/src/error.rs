//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument or configuration value is outside its valid range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Vector/matrix dimensions do not line up for the requested operation.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Matrix handed to the HPD solver is not Hermitian within tolerance.
    #[error("matrix is not Hermitian within relative tolerance {tol:e}")]
    NotHermitian { tol: f64 },

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// Pilot vector with zero energy where a data term is required.
    #[error("zero-energy pilots: x^H x must be positive")]
    ZeroPilotEnergy,

    /// A sample too close to zero for the prior score to be evaluated.
    #[error("degenerate sample at index {index}: |J| = {magnitude:e} below 1e-300")]
    DegenerateSample { index: usize, magnitude: f64 },

    /// Aggregated configuration problems, one line, `;`-separated.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Config file could not be parsed as TOML or JSON.
    #[error("failed to parse config {path}: {detail}")]
    ConfigParse { path: PathBuf, detail: String },

    /// I/O failure with the path that caused it.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
