use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("enumeration needs {states:.3e} states, limit is {limit:.0e}")]
    TooLarge { states: f64, limit: f64 },

    #[error("term of degree {degree} overflows f64")]
    Overflow { degree: usize },

    #[error("r = {r} is not below 1, bound does not apply")]
    OutsideRegime { r: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
