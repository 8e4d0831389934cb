use std::io;

use thiserror::Error;

/// Errors produced anywhere in the disagreement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record `{text_id}`: {reason}")]
    MalformedRecord { text_id: String, reason: String },

    #[error("record `{text_id}` has {profiles} profiles for {votes} votes")]
    Alignment {
        text_id: String,
        profiles: usize,
        votes: usize,
    },

    #[error("record `{text_id}` has no annotator demographics")]
    MissingDemographics { text_id: String },

    #[error("invalid label space: {0}")]
    LabelSpace(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("external predictions: {0}")]
    Bridge(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
