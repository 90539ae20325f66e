use std::path::PathBuf;

use crate::primitives::DecisionVector;

#[derive(Debug, thiserror::Error)]
pub enum OcoError {
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative dual variable {value} at index {index}")]
    NegativeDual { index: usize, value: f64 },

    #[error("step {t}: {source}")]
    Step {
        t: usize,
        #[source]
        source: Box<OcoError>,
    },

    #[error("no feasible grid point")]
    NoFeasibleGridPoint,

    #[error("offline solver did not reach feasibility: residual {residual:.3e} > tol {tol:.3e}")]
    Infeasible {
        best: DecisionVector,
        value: f64,
        residual: f64,
        tol: f64,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: no data rows")]
    EmptyData(PathBuf),

    #[error("slope fit: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl OcoError {
    pub(crate) fn at_step(self, t: usize) -> Self {
        OcoError::Step {
            t,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, OcoError>;
