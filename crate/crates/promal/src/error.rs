//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix failed a structural invariant (empty, ragged, non-finite).
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// Operand shapes do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    /// An iterative decomposition did not converge; never silently truncated.
    #[error("decomposition did not converge: {0}")]
    ConvergenceFailure(String),

    /// A matrix claimed orthogonal deviates from RᵀR = I beyond tolerance.
    #[error("matrix is not orthogonal: max |RᵀR - I| = {max_dev:.3e} (tolerance {tol:.0e})")]
    NotOrthogonal { max_dev: f64, tol: f64 },

    /// A supplied covariance is not symmetric positive definite or is too
    /// ill-conditioned to invert reliably.
    #[error("singular or non-SPD covariance: {0}")]
    SingularCovariance(String),

    /// Every scale estimate collapsed toward zero during group alignment.
    #[error("degenerate scaling: all scale estimates fell below 1e-8")]
    DegenerateScaling,

    /// Requested embedding dimension exceeds what the data supports.
    #[error("not enough dimensions: requested k={k}, maximum is {max}")]
    NotEnoughDimensions { k: usize, max: usize },

    /// All dissimilarities are zero, so normalized stress is undefined.
    #[error("zero denominator: all input dissimilarities are zero")]
    ZeroDenominator,

    /// Cluster-count request outside 1..=N.
    #[error("bad cluster count k={k}: must be between 1 and {n}")]
    BadK { k: usize, n: usize },

    /// An expected output artifact is missing from an alignment directory.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    /// A loaded matrix does not match the shape shared by the rest of the set.
    #[error("shape mismatch for '{label}': expected {expected}, got {got}")]
    ShapeMismatch {
        label: String,
        expected: String,
        got: String,
    },

    /// A text file could not be parsed; positions are 1-based.
    #[error("parse error in {file} at line {line}, column {column}: {message}")]
    ParseError {
        file: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate label: {0}")]
    DuplicateLabel(String),

    /// An invalid parameter combination, detected before any computation.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
