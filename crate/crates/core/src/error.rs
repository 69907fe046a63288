use crate::key::Key;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("enumeration too large: {count} assignments exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: usize },

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("incomplete values: {0}")]
    IncompleteValues(String),

    #[error("invalid noise model: {0}")]
    InvalidNoiseModel(String),

    #[error("underconstrained variable {0}")]
    Underconstrained(Key),

    #[error("variable {0} unconstrained in every mode")]
    UnconstrainedInEveryMode(Key),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("ambiguous threshold {0}: dead mode removal requires delta in (0.5, 1]")]
    AmbiguousThreshold(f64),

    #[error("linearization failure: {0}")]
    LinearizationFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
