use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing value at row {row}, column {col}")]
    MissingValue { row: usize, col: usize },
    #[error("non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumericCell { row: usize, col: usize, value: String },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("class {class} has too few samples ({count}) for a stratified split")]
    StratificationImpossible { class: usize, count: usize },
    #[error("class {0} is empty")]
    EmptyClass(usize),
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("shape mismatch: expected {expected} columns, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("roc auc needs both classes in the labels")]
    SingleClass,
    #[error("objective arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("point {index} is not strictly below the reference point")]
    PointBeyondReference { index: usize },
    #[error("catalog has no predictor compatible with the task")]
    EmptyCatalog,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),
    #[error("budget exhausted before the first generation completed")]
    BudgetTooSmall,
    #[error("non-finite objective value for pipeline {0}")]
    NonFiniteObjective(String),
}

pub type Result<T> = std::result::Result<T, Error>;
