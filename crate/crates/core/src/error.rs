use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("resolvent bracket expansion failed at x = {x} after {doublings} doublings (malformed graph?)")]
    BracketFailure { x: f64, doublings: u32 },
    #[error("invalid exponent {value}: {requirement}")]
    InvalidExponent {
        value: f64,
        requirement: &'static str,
    },
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
    #[error("grid mismatch: {left} vs {right} interior nodes")]
    GridMismatch { left: usize, right: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
