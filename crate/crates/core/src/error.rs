use thiserror::Error;

/// Errors raised by oracles, the FBE engine and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("stepsize must be positive and finite, got {0}")]
    InvalidStepsize(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index blocks do not partition 0..{n}: {reason}")]
    InvalidPartition { n: usize, reason: String },

    #[error("conjugate value is not available in closed form; supply a value callback")]
    MissingConjugateValue,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("stepsize halved more than {0} times; f is not smooth or not convex")]
    TooManyHalvings(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidStepsize(gamma))
    }
}
