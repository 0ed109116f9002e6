use thiserror::Error;

use crate::lp::LpStatus;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear program terminated with status {0}")]
    Solver(LpStatus),

    #[error("optimal support still touches the velocity bound at n-v = {n_v} (cap {cap})")]
    TruncationExceeded { n_v: usize, cap: usize },

    #[error("rotation vector {0:?} is outside the reachable velocity hull")]
    RotationOutOfRange(Vec<f64>),

    #[error("brute-force enumeration refused: {vars} variables exceeds the limit of {limit}")]
    TooLarge { vars: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
