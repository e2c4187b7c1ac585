use thiserror::Error;

use crate::svm::OneClassModel;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum OcxError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate bandwidth: nearest-neighbour distance quantile is zero")]
    DegenerateBandwidth,

    /// The solver ran out of iterations. The best iterate found so far is kept
    /// so callers can decide whether it is usable.
    #[error("solver did not converge after {iterations} pair updates (KKT residual {residual:e})")]
    Convergence {
        iterations: u64,
        residual: f64,
        best: Box<OneClassModel>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("gradient is singular within {distance:e} of support vector {index}")]
    SingularPoint { index: usize, distance: f64 },

    #[error("flip AUC undefined: initial score is zero")]
    UndefinedAuc,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl OcxError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            OcxError::Convergence { .. }
                | OcxError::SingularPoint { .. }
                | OcxError::UndefinedAuc
                | OcxError::DegenerateBandwidth
        )
    }
}

pub type Result<T> = std::result::Result<T, OcxError>;
