use std::io;

use thiserror::Error;

use crate::domain::ImageError;
use crate::oracle::OracleError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Image(#[from] ImageError),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error("region {h}x{w} is too small to partition")]
    RegionTooSmall { h: usize, w: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid responsibility map: {0}")]
    InvalidMap(String),

    #[error("ranking exhausted without reproducing the label (non-deterministic oracle?)")]
    ExhaustedRanking,

    #[error("universe of {size} units exceeds the exhaustive limit of {limit}")]
    UniverseTooLarge { size: usize, limit: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed artifact: {0}")]
    Format(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}
