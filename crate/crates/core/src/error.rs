use thiserror::Error;

use crate::gemm::Mode;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("mode {0} is not valid for this kernel")]
    InvalidMode(Mode),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("reference matrix is all zero; RMS is undefined")]
    ZeroReference,
    #[error("bad matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
