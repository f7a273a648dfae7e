use thiserror::Error;

/// Errors raised by the solver and the estimate harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain specification: {0}")]
    InvalidDomain(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("band coverage too small: 2^{j_max} does not cover sqrt(lambda) = {max_frequency}")]
    BandCoverage { j_max: u32, max_frequency: f64 },

    #[error("operation not supported on this domain: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("solver instability: relative mass drift {drift:e} exceeds {limit:e} at t = {time}")]
    Instability { drift: f64, limit: f64, time: f64 },

    #[error("focusing run rejected: mass {mass:e} exceeds threshold {threshold:e}")]
    FocusingMass { mass: f64, threshold: f64 },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
