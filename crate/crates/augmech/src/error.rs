//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AugmechError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative value at index {0}")]
    NegativeValue(usize),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("need at least {need} bidders, got {got}")]
    TooFewBidders { need: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("allocation is not monotone at position {0}")]
    NonMonotoneAllocation(usize),

    #[error("instance too large for brute force: n = {0}")]
    BruteForceTooLarge(usize),

    #[error("mixture has zero total weight")]
    ZeroTotalWeight,

    #[error("black-box mechanism lacks the top-{0} winner-set property")]
    MissingWinnerSetProperty(usize),

    #[error("offline mechanism family missing prefix size {0}")]
    MissingPrefixSize(usize),

    #[error("density is not normalized: integral = {0}")]
    UnnormalizedDensity(f64),

    #[error("{0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, AugmechError>;
