use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every stage of the intention-mining pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("document id must be nonempty")]
    EmptyId,

    #[error("invalid seed vector: {0}")]
    InvalidSeeds(String),

    #[error("invalid preprocessing config: {0}")]
    InvalidPreprocess(String),

    #[error("vocabulary empty after min_df filtering")]
    EmptyVocabulary,

    #[error("feature index {index} out of range for {n_cols} columns")]
    FeatureOutOfRange { index: usize, n_cols: usize },

    #[error("duplicate feature index {0} in subset")]
    DuplicateFeature(usize),

    #[error("no feature exceeds threshold {0}")]
    NoFeatureSelected(f64),

    #[error("row {0} has no class label")]
    UnlabeledRow(usize),

    #[error("{expected} labels expected, got {actual}")]
    LabelCount { expected: usize, actual: usize },

    #[error("training data contains a single class; both Yes and No are required")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid value {value} at row {row}, column {col}")]
    InvalidValue { row: usize, col: usize, value: f64 },

    #[error("invalid classifier parameters: {0}")]
    InvalidParams(String),

    #[error("invalid fold plan: {0}")]
    InvalidFolds(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("leave-one-out needs at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("matrix format: {0}")]
    MatrixFormat(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
