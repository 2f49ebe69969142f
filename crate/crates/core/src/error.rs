use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("linear map is rank deficient (singular value ratio {ratio:e})")]
    DegenerateTransform { ratio: f64 },

    #[error("shape matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("shape matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector system must be square: {rows} vectors of length {len}")]
    NotSquare { rows: usize, len: usize },

    #[error("row {row} has norm {norm} (expected a unit vector)")]
    NonUnitVector { row: usize, norm: f64 },

    #[error("row {row} contains a non-finite entry")]
    NonFinite { row: usize },

    #[error("vector system is linearly dependent (smallest Gram eigenvalue {smallest_eigenvalue:e})")]
    DegenerateSystem { smallest_eigenvalue: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("wrong dimension: expected n = {expected}, found n = {found}")]
    WrongDimension { expected: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
