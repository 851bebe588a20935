use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive price at row {row}, column {col}")]
    NonPositivePrice { row: usize, col: usize },

    #[error("too few rows: got {rows}, need at least {min}")]
    TooFewRows { rows: usize, min: usize },

    #[error("missing or non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(usize),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vector is not unit-normalized (norm {0})")]
    NotNormalized(f64),

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("subset of size {size} cannot be split into {clusters} clusters")]
    SubsetTooSmall { size: usize, clusters: usize },

    #[error("intra-block correlation {rho} outside the positive-definite range for block size {d}")]
    InvalidRho { rho: f64, d: usize },

    #[error("matrix is not positive definite (min eigenvalue {0})")]
    NotPositiveDefinite(f64),

    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("too few eigenvalues for the MP fit: have {have}, need {need}")]
    TooFewEigenvalues { have: usize, need: usize },

    #[error("MP fit pinned to the grid boundary (sigma {sigma}, q {q})")]
    FitDegenerate { sigma: f64, q: f64 },

    #[error("invalid number of kept eigenvalues k = {k} for dimension {n}")]
    InvalidK { k: usize, n: usize },

    #[error("flat noise value {0} is not positive; too many signal eigenvalues kept")]
    NegativeFlatValue(f64),

    #[error("subband {0} captured no eigenvector")]
    EmptySubband(String),

    #[error("tail index nu = {0} must exceed 2")]
    InvalidNu(f64),

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by the command-line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Input,
    Numerical,
    EmptyGroup,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            EmptyGroup(_) | EmptySubband(_) => ErrorCategory::EmptyGroup,
            NotPositiveDefinite(_)
            | ConvergenceFailure(_)
            | TooFewEigenvalues { .. }
            | FitDegenerate { .. }
            | NegativeFlatValue(_)
            | NotNormalized(_)
            | ZeroVarianceColumn(_) => ErrorCategory::Numerical,
            _ => ErrorCategory::Input,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
