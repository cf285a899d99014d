use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid summation exponent q = {0} (must be >= 1 or infinite)")]
    InvalidExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("scale not resolvable: {0}")]
    Unresolvable(String),

    #[error("field is not centered: |u(0)| = {0:e}")]
    NotCentered(f64),

    #[error("field is not divergence free: sup |div u| = {0:e}")]
    NotDivergenceFree(f64),

    #[error("matrix is not trace free: tr A = {0:e}")]
    NotTraceFree(f64),

    #[error("field has a nonzero linear part (|A| = {0:e})")]
    HasLinearPart(f64),

    #[error("singular moment system")]
    SingularMoments,

    #[error("time grids do not match")]
    TimeGridMismatch,

    #[error("fixed-point iteration failed after {iterations} iterations (ratio {ratio:.3})")]
    NoConvergence { iterations: usize, ratio: f64 },

    #[error("CFL guard tripped: dt * sup|u| / h = {0:.3}")]
    Cfl(f64),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
