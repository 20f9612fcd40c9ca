use thiserror::Error;

/// Errors produced by the privtab core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidDomain(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("attribute {attr}: unknown label {label:?}")]
    UnknownLabel { attr: String, label: String },

    #[error("attribute {attr}: value {value} outside bin range")]
    OutOfRange { attr: String, value: f64 },

    #[error("missing column {0:?} in csv header")]
    MissingColumn(String),

    #[error("unknown column {0:?} in csv header")]
    UnknownColumn(String),

    #[error("invalid marginal schema: {0}")]
    InvalidSchema(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("cell index {index} out of range for lattice of size {len}")]
    CellOutOfRange { index: usize, len: usize },

    #[error("invalid privacy parameters: {0}")]
    InvalidPrivacyParams(String),

    #[error("no noise strategy available: {0}")]
    NoStrategy(String),

    #[error("marginal total {0} is negative; too noisy to salvage")]
    NegativeTotal(f64),

    #[error("attribute {0:?} has no values above threshold; domain would be empty")]
    EmptyAttribute(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("range query rejection exceeded {0} attempts")]
    QueryRejection(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
