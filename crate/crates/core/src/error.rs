use thiserror::Error;

use crate::costs::Objective;

/// Errors raised by model construction, inference and planning.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid cost model: {0}")]
    InvalidCost(String),

    #[error("measurement {measurement} is impossible under the current belief (normaliser {normaliser:e})")]
    ImpossibleMeasurement { measurement: usize, normaliser: f64 },

    #[error("measurement sequence has zero likelihood under the model")]
    InfeasibleEvidence,

    #[error("problem too large for exhaustive enumeration: {0}")]
    SizeGuard(String),

    #[error("base point {index} is on the simplex boundary; stage-cost gradient is not finite there")]
    BoundaryBasePoint { index: usize },

    #[error(
        "objective `{0}` has stage costs that are convex in the belief state; \
         tangent-plane PWLC approximation requires concave costs \
         (use active_estimation or active_obfuscation instead)"
    )]
    NonConcaveObjective(Objective),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
