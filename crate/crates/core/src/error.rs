use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// The solver produced NaN or infinite iterates.
    #[error("solver diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("{path}: ragged row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("{path}: non-numeric cell {value:?} at row {row}, column {column}")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("x.csv header of block {block} {found:?} does not match block 0 {expected:?}")]
    HeaderMismatch {
        block: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("block {block}: row counts differ ({detail})")]
    RowCountMismatch { block: usize, detail: String },

    #[error("zero-variance covariate column(s): {0:?}")]
    ZeroVariance(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NonFinite(_) => "non_finite",
            Error::Diverged { .. } => "diverged",
            Error::Factorization(_) => "factorization",
            Error::UnsupportedScenario(_) => "unsupported_scenario",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::RaggedRow { .. } => "ragged_row",
            Error::NonNumeric { .. } => "non_numeric",
            Error::HeaderMismatch { .. } => "header_mismatch",
            Error::RowCountMismatch { .. } => "row_count_mismatch",
            Error::ZeroVariance(_) => "zero_variance",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
        }
    }
}
