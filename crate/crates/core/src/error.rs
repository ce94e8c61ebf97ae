use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step index {index} out of range 0..={max}")]
    StepOutOfRange { index: usize, max: usize },

    #[error("data error for ticker `{ticker}`{}: {reason}", date.as_ref().map(|d| format!(" on {d}")).unwrap_or_default())]
    Data {
        ticker: String,
        date: Option<String>,
        reason: String,
    },

    #[error("kappa undefined{}: zero return variance", ticker.as_ref().map(|t| format!(" for `{t}`")).unwrap_or_default())]
    UndefinedKappa { ticker: Option<String> },

    #[error("panel mode mismatch: expected {expected}, found {found}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("design matrix is rank deficient: {0}")]
    Rank(String),

    #[error("not enough degrees of freedom: {rows} observations for {cols} regressors")]
    DegreesOfFreedom { rows: usize, cols: usize },

    #[error("density domain error: {0}")]
    Domain(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("duplicate ticker `{0}`")]
    DuplicateTicker(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn data(ticker: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Data {
            ticker: ticker.into(),
            date: None,
            reason: reason.into(),
        }
    }
}
