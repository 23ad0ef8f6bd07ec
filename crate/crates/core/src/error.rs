use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {0} lies outside the unit interval")]
    OutsideDomain(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("length mismatch in {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is numerically singular at column {0}")]
    Singular(usize),

    #[error("iteration diverged at step {step}: {what} became non-finite")]
    Diverged { step: usize, what: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
