use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NcczError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    EigenNonConvergence { sweeps: usize, residual: f64 },

    #[error("rank decision ambiguous: eigenvalue {value:e} lies within the tolerance band of the cut {cut:e}")]
    AmbiguousRank { value: f64, cut: f64 },

    #[error("level {level} outside [{k_min}, {k_max}]")]
    LevelOutOfRange { level: i32, k_min: i32, k_max: i32 },

    #[error("point {0:?} lies outside the grid box")]
    PointOutsideBox(Vec<f64>),

    #[error("E_k f exceeds lambda = {lambda} already at the coarsest level {level} (max eigenvalue {max_eig}); enlarge the box or lambda")]
    CoarsestLevelViolation { lambda: f64, level: i32, max_eig: f64 },

    #[error("truncation radius {eps} is smaller than half a finest cell ({half_cell})")]
    UnresolvableTruncation { eps: f64, half_cell: f64 },

    #[error("symbol is not odd: even part has L1 mass {0:e}")]
    NotOdd(f64),

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NcczError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(NcczError::InvalidArgument(msg.into()))
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> NcczError {
    let context = path.into();
    move |source| NcczError::Io { context, source }
}
