use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// Variants are grouped by the stage that raises them so the CLI can map them
/// onto exit codes (`Config` is a usage error, everything else is a runtime
/// failure).
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dataset has no data rows")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class {0} has no points")]
    EmptyClass(i8),

    #[error("requested {requested} points but only {available} are available")]
    TooManyRequested { requested: usize, available: usize },

    #[error("atom count {count} exceeds the cap of {cap}")]
    AtomCapExceeded { count: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("objective returned a non-finite value or subgradient at iteration {0}")]
    NonFinite(usize),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("relative difference undefined: benchmark AUC is 1")]
    UndefinedRelativeDifference,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a usage or configuration problem.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
