use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("division by zero at ({row}, {col})")]
    DivByZero { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid dimension: {0}")]
    BadDim(String),
    #[error("invalid penalty settings: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("lq inner solve failed for |x| = {x_abs}")]
    NewtonFailed { x_abs: f64 },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("zero variance in column {index}")]
    ZeroVariance { index: usize },
    #[error("not a correlation matrix: diagonal entry {index} is {value}")]
    NotCorrelation { index: usize, value: f64 },
    #[error("covariance is not positive semidefinite (min eigenvalue {min_eig})")]
    NotPsd { min_eig: f64 },
    #[error("reference matrix has zero norm")]
    ZeroTruth,
    #[error("solver did not converge after {iters} iterations (step norm {step_norm:e})")]
    DidNotConverge { iters: usize, step_norm: f64 },
    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
