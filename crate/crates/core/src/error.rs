use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("boundary increment must be nonnegative, got {0}")]
    NegativeIncrement(f64),

    #[error("smoothing rate must be positive, got {0}")]
    NonPositiveRate(f64),

    #[error("law has no grid or atomic representation: {0}")]
    NotDiscretizable(String),

    #[error("paths have mismatched horizons ({0} vs {1})")]
    HorizonMismatch(f64, f64),

    #[error("ordering violation: {0}")]
    OrderingViolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
