use thiserror::Error;

#[derive(Debug, Error)]
pub enum QrocError {
    #[error("quantile level {0} is outside (0, 1)")]
    Domain(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    Singular { rank: usize, cols: usize },

    #[error("level {rho} leaves fewer than one observation on one side of the quantile (n = {n})")]
    ExtremeQuantile { rho: f64, n: usize },

    #[error("simplex did not converge after {0} pivots")]
    NoConvergence(usize),

    #[error("inference failed: {0}")]
    Inference(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, QrocError>;
