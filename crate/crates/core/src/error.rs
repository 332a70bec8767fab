use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("no data rows")]
    EmptyData,

    #[error("pilot sample has {rows} rows, need at least {required}")]
    PilotTooSmall { rows: usize, required: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("scheme `{scheme}` is not compatible with model `{family}`")]
    IncompatibleScheme { scheme: String, family: String },

    #[error("infeasible budget m = {m} for n = {n}, alpha = {alpha}")]
    InfeasibleBudget { m: f64, n: usize, alpha: f64 },

    #[error("all sizes are zero and the budget differs from n * alpha")]
    DegenerateSizes,

    #[error("inclusion probability is zero at index {0} but its size is positive")]
    ZeroProbabilityWithMass(usize),

    #[error("sample is empty")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
