//! Library error type.

use alloc::string::String;

/// Errors reported by the decomposition machinery.
///
/// `InvalidInput` covers precondition violations (dimension mismatches,
/// degenerate states), `ResourceLimit` marks requests whose exact evaluation
/// would exceed the enumeration ceiling, and `Numerical` marks internal
/// failures such as a non-converging eigensolve.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty decomposition")]
    EmptyDecomposition,
    #[error("linearly dependent elements: numerical rank {rank} of {n}")]
    LinearlyDependent { rank: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid spectral measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
