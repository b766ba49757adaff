use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("rank deficient input: detected rank {rank} of {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("invalid model space: {0}")]
    InvalidModel(String),

    #[error("vector is not vertical (horizontal part {residual:e})")]
    NotVertical { residual: f64 },

    #[error("vector is not horizontal (vertical part {residual:e})")]
    NotHorizontal { residual: f64 },

    #[error("basis is not orthonormal (Gram residual {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("operation requires parallel mode (derivative terms unknown pointwise)")]
    ParallelModeRequired,

    #[error("vertical dimension must be 2, found {found}")]
    VerticalDimension { found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subspace is not invariant under the algebra (residual {residual:e})")]
    NotInvariant { residual: f64 },

    #[error("inconsistent infinitesimal model: curvature value outside h (residual {residual:e})")]
    InconsistentModel { residual: f64 },

    #[error("bracket closure did not stabilise within {rounds} rounds")]
    NonConvergence { rounds: usize },

    #[error("point too close to chart boundary on axis {axis}: margin {margin:e} < required {required:e}")]
    MarginViolation { axis: usize, margin: f64, required: f64 },

    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    #[error("|f| = {modulus} >= 1 at point {point:?}")]
    ModulusViolation { point: Vec<f64>, modulus: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
