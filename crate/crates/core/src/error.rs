use std::path::PathBuf;

use crate::fingerprint::AttributeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("vectors must not be empty")]
    EmptyVector,

    #[error("duplicate attribute `{0}` in fingerprint")]
    DuplicateAttribute(AttributeId),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference fingerprint map is empty")]
    EmptyReferenceMap,

    #[error("query fingerprint has no observed attributes")]
    EmptyFingerprint,

    #[error("k = {k} is invalid for {available} reference records")]
    NeighborCount { k: usize, available: usize },

    #[error("record {index} lacks a {label} label")]
    MissingLabel { index: usize, label: &'static str },

    #[error("inconsistent labels: {0}")]
    InconsistentLabels(String),

    #[error("statistic requires a non-empty sample")]
    EmptySample,

    #[error("quantile {0} outside [0, 1]")]
    Quantile(f64),

    #[error("cannot split {n} samples into {folds} folds")]
    FoldCount { folds: usize, n: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    Parse { row: usize, column: String, value: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
