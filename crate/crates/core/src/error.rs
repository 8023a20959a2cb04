use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum SscError {
    #[error("column {index} has norm {norm:e}, below the zero-column threshold")]
    ZeroColumn { index: usize, norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("Cholesky factorization failed even after jitter; check data scaling")]
    CholeskyFailure,

    #[error("dictionary is degenerate: max |<a_j, x>| = {0:e}")]
    DegenerateDictionary(f64),

    #[error("points do not span the subspace (smallest singular value {0:e})")]
    RankDeficient(f64),

    #[error("points leave the subspace spanned by the basis (residual {0:e})")]
    OutOfSpan(f64),

    #[error("projected dual vector vanishes (norm {0:e})")]
    DegenerateDual(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("clean data and subspace ensemble are required")]
    MissingCleanData,

    #[error("eigensolver did not converge within {0} sweeps")]
    EigenFailure(usize),

    #[error("label {label} outside [0, {classes})")]
    LabelRangeMismatch { label: usize, classes: usize },

    #[error("in-mask coefficient mass is zero")]
    AllZeroMass,

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SscError>;

impl SscError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SscError::Io {
            path: path.into(),
            source,
        }
    }
}
