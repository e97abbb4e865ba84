use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// `row` is 1-based and counts the header as row 1; `column` is the header name.
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("class column not found: {0}")]
    ClassColumnNotFound(String),

    #[error("dataset needs at least 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("dataset needs at least 2 features, found {0}")]
    TooFewFeatures(usize),

    #[error("dataset needs at least 2 rows, found {0}")]
    TooFewRows(usize),

    #[error("duplicate feature name: {0}")]
    DuplicateFeature(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Every feature has zero mutual information with the class.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("class '{class}' has {count} members, fewer than the {folds} folds requested")]
    ClassTooSmall {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("unknown hyperparameter '{key}' for {kind}")]
    UnknownHyperparameter { kind: String, key: String },

    #[error("model expects {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown format: {0}")]
    UnknownFormat(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{coordinate}: {source}")]
    Cell {
        coordinate: String,
        #[source]
        source: Box<Error>,
    },
}
