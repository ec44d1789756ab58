//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate item id {0:?}")]
    DuplicateId(String),
    #[error("invalid item {id:?}: field {field:?}: {reason}")]
    InvalidItem {
        id: String,
        field: String,
        reason: String,
    },
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("empty catalog")]
    EmptyCatalog,
    #[error("unknown item id {0:?}")]
    UnknownItem(String),
    #[error("empty after sanitization")]
    EmptyAfterSanitize,
    #[error("no concretization available")]
    NoConcretization,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("off-policy plan: {0}")]
    OffPolicyPlan(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("all dataset examples were inexpressible")]
    AllSkipped,
    #[error("router training data contains a single class")]
    SingleClass,
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
