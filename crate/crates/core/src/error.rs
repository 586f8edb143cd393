use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    Empty,
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("negative weight {weight} at position {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("weights sum to zero")]
    ZeroTotalWeight,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dataset needs at least one {0} unit")]
    EmptyArm(&'static str),
    #[error("unit {index} has {got} covariates, expected {expected}")]
    CovariateDimension {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("{0} is missing on at least one unit")]
    MissingField(&'static str),
    #[error("stratum T={treated}, Z={instrument} has no units")]
    EmptyStratum { treated: u8, instrument: u8 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least two treated units for a variance, got {0}")]
    TooFewTreated(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
