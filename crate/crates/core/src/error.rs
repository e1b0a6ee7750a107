use thiserror::Error;

/// Errors raised by the ARIMA engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series must contain at least one value")]
    EmptySeries,

    #[error("series contains a non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("differencing order {d} is too large for a series of length {len}")]
    OrderTooLarge { d: usize, len: usize },

    #[error("cannot invert differencing: expected {expected} initial values, found {found}")]
    CannotInvert { expected: usize, found: usize },

    #[error("window {start}..{end} is empty or outside a series of length {len}")]
    InvalidWindow { start: usize, end: usize, len: usize },

    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("need at least {needed} observations, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("lag {lag} must satisfy 1 <= lag < {n}")]
    InvalidLag { lag: usize, n: usize },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid simulation specification: {0}")]
    InvalidSimulation(String),

    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),

    #[error("line {line}: cannot parse `{value}` in column `{column}` as a number")]
    Parse {
        line: u64,
        column: String,
        value: String,
    },

    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
