//! Shared error type for the modeling pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("profile file is empty (no data rows)")]
    EmptyProfileFile,

    #[error("missing column `{0}` in profile header")]
    MissingColumn(String),

    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate app_id `{app_id}` at row {row}")]
    DuplicateAppId { app_id: String, row: usize },

    #[error("unknown app_id `{0}`")]
    UnknownAppId(String),

    #[error("invalid resource space: {0}")]
    InvalidSpace(String),

    #[error("resource space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid cluster count k={k}: {reason}")]
    InvalidK { k: usize, reason: String },

    #[error("invalid k range [{k_min}, {k_max}]")]
    InvalidKRange { k_min: usize, k_max: usize },

    #[error("missing representative for cluster {0}")]
    MissingRepresentative(usize),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid d_max={d_max} for k={k}")]
    InvalidDMax { d_max: usize, k: usize },

    #[error("non-finite value in training data at row {0}")]
    NonFiniteValue(usize),

    #[error("too few rows: got {got}, need at least {need}")]
    TooFewRows { got: usize, need: usize },

    #[error("split fractions {0:?} do not sum to 1")]
    InvalidSplit([f64; 3]),

    #[error("ground truth contains zero values; MAPE is undefined")]
    ZeroTruth,

    #[error("ground truth has zero variance; R^2 is undefined")]
    ZeroVariance,

    #[error("cell index {index} out of range (M={m})")]
    CellOutOfRange { index: usize, m: usize },

    #[error("EMPTY_CELL: cell {0} has no stored combinations")]
    EmptyCell(usize),

    #[error("knowledge base has zero non-empty cells")]
    NoFilledCells,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),
}
