use alloc::string::String;

/// Errors raised by the bandit primitives.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite numeric input: {0}")]
    NonFinite(&'static str),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("duplicate record for instance {instance}, algorithm {algorithm}, round {round}")]
    DuplicateRecord {
        instance: usize,
        algorithm: String,
        round: usize,
    },
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
    #[error("invalid prediction range: width must be positive, got {0}")]
    InvalidRange(f64),
    #[error("infeasible action distribution: greedy mass {0}")]
    InfeasibleDistribution(f64),
    #[error("substitution prediction violates the mixability conditions")]
    InfeasiblePrediction,
    #[error("index {index} out of range for {len} entries")]
    Index { index: usize, len: usize },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

pub(crate) fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
