use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command-line front end for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Numerical,
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("malformed image at byte offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("index ({row}, {col}) out of range for {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("vertex {0} is isolated (zero degree)")]
    IsolatedVertex(usize),

    #[error("invalid edge ({i}, {j}, {w}): {msg}")]
    InvalidEdge { i: usize, j: usize, w: f64, msg: String },

    #[error("incomplete Cholesky broke down after {attempts} diagonal shifts; use the Jacobi preconditioner instead")]
    IcBreakdown { attempts: usize },

    #[error("zero diagonal in triangular factor at row {0}")]
    ZeroDiagonal(usize),

    #[error("matrix is rank deficient: {deficient} of {cols} columns are linearly dependent")]
    RankDeficient { deficient: usize, cols: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Format { .. } => ErrorKind::Io,
            Error::IcBreakdown { .. }
            | Error::ZeroDiagonal(_)
            | Error::RankDeficient { .. }
            | Error::NonFinite(_) => ErrorKind::Numerical,
            Error::IndexOutOfRange { .. }
            | Error::DimensionMismatch { .. }
            | Error::IsolatedVertex(_)
            | Error::InvalidEdge { .. }
            | Error::InvalidParameter(_) => ErrorKind::Config,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
