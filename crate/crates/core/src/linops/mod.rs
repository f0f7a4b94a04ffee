//! Dense vectors and matrices, linear operators with adjoints, and
//! spectral-norm estimation.

mod dense;
pub mod io;
mod map;
mod norm;

use std::path::Path;

pub use dense::{axpy, dist2, dot, norm1, norm2, norm_inf, DenseMatrix};
pub use map::{CallbackMap, LinearMap, MapKind};
pub use norm::{
    estimate_sq_norm, gram_combination_sq_norm, NormEstimate, DEFAULT_NORM_MAX_ITER,
    DEFAULT_NORM_TOL, NORM_SAFETY_FACTOR,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinopError {
    #[error("{op}: expected a vector of length {expected}, got {found}")]
    Dimension {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("cannot compose: outer map has {outer_cols} columns but inner map has {inner_rows} rows")]
    ComposeMismatch { outer_cols: usize, inner_rows: usize },
    #[error("cannot stack: expected {expected} columns, found {found}")]
    StackMismatch { expected: usize, found: usize },
    #[error("matrix shape {rows}x{cols} is empty")]
    EmptyShape { rows: usize, cols: usize },
    #[error("storage of length {len} does not match shape {rows}x{cols}")]
    StorageLength { rows: usize, cols: usize, len: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("{}line {line}: {message}", file.as_ref().map(|f| format!("{f}: ")).unwrap_or_default())]
    Parse {
        file: Option<String>,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl LinopError {
    fn in_file(self, path: &Path) -> Self {
        match self {
            LinopError::Parse { line, message, .. } => LinopError::Parse {
                file: Some(path.display().to_string()),
                line,
                message,
            },
            other => other,
        }
    }
}
