use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("image has zero area")]
    EmptyImage,

    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },

    #[error("image of {width}x{height} is smaller than the {window}x{window} window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },

    #[error("{0} region is empty")]
    EmptyRegion(&'static str),

    #[error("mask selects no pixels")]
    EmptyMask,

    #[error("ground truth has no foreground pixels")]
    EmptyGroundTruth,

    #[error("cannot aggregate an empty list")]
    EmptyList,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("block size {block} exceeds sample count {available}")]
    BlockTooLarge { block: usize, available: usize },

    #[error("invalid kernel config: {0}")]
    InvalidKernel(String),

    #[error("zero-norm vector{}", .0.as_deref().map(|id| format!(" ({id})")).unwrap_or_default())]
    ZeroVector(Option<String>),

    #[error("k = {k} outside 1..={available}")]
    KOutOfRange { k: usize, available: usize },

    #[error("invalid knowledge base: {0}")]
    InvalidKnowledgeBase(String),

    #[error("retrieval list is empty")]
    EmptyRetrievalList,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("invalid CEMB data: {0}")]
    Cemb(String),

    #[error("missing predictions for: {}", .0.join(", "))]
    MissingPrediction(Vec<String>),

    #[error("{id}: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(what: &'static str, expected: (usize, usize), actual: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            what,
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", actual.0, actual.1),
        }
    }

    pub fn for_sample(self, id: impl Into<String>) -> Self {
        Error::Sample {
            id: id.into(),
            source: Box::new(self),
        }
    }
}
