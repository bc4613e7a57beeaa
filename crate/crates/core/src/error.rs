use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Malformed Matrix Market content, one variant per failure class.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixMarketError {
    #[error("line {line}: malformed header: {reason}")]
    Header { line: usize, reason: String },
    #[error("line {line}: unsupported field `{field}` (only `real` is accepted)")]
    Field { line: usize, field: String },
    #[error("line {line}: malformed size line")]
    Size { line: usize },
    #[error("line {line}: malformed entry")]
    Entry { line: usize },
    #[error("line {line}: index ({row}, {col}) out of bounds for {n_rows}x{n_cols}")]
    IndexOutOfBounds {
        line: usize,
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("singular triangular factor: zero diagonal at row {row}")]
    SingularFactor { row: usize },

    #[error("matrix not SPD: non-positive pivot {pivot:e} while factoring row {row}")]
    NotSpd { row: usize, pivot: f64 },

    #[error("operator not SPD: p'Ap = {value:e} at iteration {iteration}")]
    OperatorNotSpd { iteration: usize, value: f64 },

    #[error("coarsest-level factorization failed on level {level}: {reason}")]
    CoarseFactorization { level: usize, reason: String },

    #[error("eigensolver did not converge: worst relative residual {worst:e}")]
    EigenNoConvergence { worst: f64 },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    MatrixMarket {
        path: PathBuf,
        #[source]
        source: MatrixMarketError,
    },

    #[error("{path}: line {line}: {reason}")]
    Coordinates {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { op, expected, got }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
