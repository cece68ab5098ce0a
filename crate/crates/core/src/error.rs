use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("data length {len} is not a multiple of dimension {dim}")]
    RaggedData { len: usize, dim: usize },

    #[error("non-finite value at row {row}, component {component}")]
    NonFinite { row: usize, component: usize },

    #[error("zero-norm vector at row {row} has no cosine direction")]
    ZeroNorm { row: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("truncated file at byte offset {offset}: {what}")]
    Truncated { offset: u64, what: &'static str },

    #[error("inconsistent dimension at record {record} (byte offset {offset}): expected {expected}, found {found}")]
    InconsistentDimension {
        record: usize,
        offset: u64,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in record {record} at byte offset {offset}")]
    NonFiniteRecord { record: usize, offset: u64 },

    #[error("malformed file at byte offset {offset}: {reason}")]
    Malformed { offset: u64, reason: String },

    #[error("not a {0} file")]
    BadMagic(&'static str),

    #[error("unsupported {format} version {version}")]
    UnsupportedVersion { format: &'static str, version: u32 },

    #[error("need at least 2 points to build a neighbor graph, got {0}")]
    TooFewPoints(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("candidate list is not sorted by distance at position {0}")]
    UnsortedCandidates(usize),

    #[error("graph has {graph} nodes but the vector set has {vectors}")]
    GraphSizeMismatch { graph: usize, vectors: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}
