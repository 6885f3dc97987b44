use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {block}{}", sample_suffix(*.sample))]
    NonFinite {
        block: &'static str,
        sample: Option<u64>,
    },

    #[error("cannot prune the only remaining hidden unit")]
    LastHiddenUnit,

    #[error("hidden unit index {index} out of range for width {width}")]
    NodeIndex { index: usize, width: usize },

    #[error("need at least two hidden units to pick the weakest, got {0}")]
    TooFewNodes(usize),

    #[error("network significance requested before any node statistics were collected")]
    EmptyStats,

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("IDX format error in {path}: {message}")]
    Idx { path: PathBuf, message: String },

    #[error("permutation is not a bijection on 0..{0}")]
    Permutation(usize),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn sample_suffix(sample: Option<u64>) -> String {
    match sample {
        Some(s) => format!(" at sample {s}"),
        None => String::new(),
    }
}
