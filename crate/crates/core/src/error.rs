use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed image header: {0}")]
    MalformedHeader(String),

    #[error("malformed image data: {0}")]
    MalformedData(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("pixel {index} has value {value}, outside [0, 255]; clip before saving")]
    OutOfRange { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("relative noise level is undefined for an all-zero clean image")]
    ZeroNormImage,

    #[error(
        "target noise level {target_k:.3}% is unreachable; best achieved {best_k:.3}% at parameter {best_param}"
    )]
    UnreachableNoiseLevel {
        target_k: f64,
        best_k: f64,
        best_param: f64,
    },

    #[error("graph is disconnected: vertex {0} is unreachable from vertex 0")]
    DisconnectedGraph(usize),

    #[error("eigensolver did not converge after {iterations} iterations (worst relative residual {worst_residual:e})")]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("dense eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("spectrum has no patch basis; call build_patch_basis first")]
    MissingBasis,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
