use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("response must be binary: found {value} at row {row}")]
    NonBinaryResponse { row: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("matrix is singular (smallest singular value {smallest_singular_value:e})")]
    Singular { smallest_singular_value: f64 },

    #[error("objective is non-finite at every line-search point (iteration {iteration}, lambda {lambda:e})")]
    NonFiniteObjective {
        iteration: usize,
        lambda: f64,
        beta: Vec<f64>,
    },

    #[error("every lambda on the path failed; last error: {0}")]
    PathFailed(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical routines, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::NonFiniteObjective { .. } | Error::PathFailed(_)
        )
    }
}
