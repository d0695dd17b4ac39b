//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite sample at {coord:?}")]
    NonFinite { coord: Vec<f64> },
    #[error("expected a field in {expected} space")]
    SpaceMismatch { expected: &'static str },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("scale {j} outside the resolvable window [{j_min}, {j_max}]")]
    ScaleOutOfWindow { j: i32, j_min: i32, j_max: i32 },
    #[error("empty scale window")]
    EmptyWindow,
    #[error("symbol carries mass {mass:e} on unresolvable bins (limit {limit:e})")]
    UnresolvableMass { mass: f64, limit: f64 },
    #[error("field has nonzero mean {mean:e}")]
    NonzeroMean { mean: f64 },
    #[error("support violation: {0}")]
    Support(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
