use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("matrix has a negative entry {value} at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("matrix has a non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("graph sequence is not monotone: A_{t}[{i},{j}] decreased from {before} to {after}")]
    NotMonotone {
        t: usize,
        i: usize,
        j: usize,
        before: f64,
        after: f64,
    },

    #[error("normal matrix for node {node} is singular; use kappa > 0")]
    SingularNormalMatrix { node: usize },

    #[error("non-finite {what} at iterate {iteration}")]
    NonFiniteIterate { what: &'static str, iteration: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn dims(
        context: impl Into<String>,
        expected: impl std::fmt::Display,
        found: impl std::fmt::Display,
    ) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-parsable class name, printed by the CLI on failure.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSquare { .. } | Error::NotSymmetric { .. } | Error::NegativeEntry { .. } => {
                "invalid_matrix"
            }
            Error::NonFinite { .. } => "non_finite",
            Error::NotMonotone { .. } => "not_monotone",
            Error::SingularNormalMatrix { .. } => "singular",
            Error::NonFiniteIterate { .. } => "diverged",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
        }
    }
}
