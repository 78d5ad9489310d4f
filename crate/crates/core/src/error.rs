use thiserror::Error;

/// Errors reported by the lattice, boundary and refinement operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),

    #[error("operation requires a nonempty digital set")]
    EmptySet,

    #[error("blow-up radius {alpha} is below rho/2 = {half_rho}; the projection may be empty or disconnected")]
    AlphaBelowHalfRho { alpha: f64, half_rho: f64 },

    #[error("invalid convex set oracle: {0}")]
    InvalidOracle(String),

    #[error("grid ratio {ratio} unsupported: {reason}")]
    BadRatio { ratio: f64, reason: &'static str },

    #[error("boundary layer range [{0}, {1}] unsupported; only layers in [-2, 2] are computed")]
    LayerRange(i32, i32),

    #[error("invalid boundary pair: {0}")]
    InvalidPair(String),

    #[error("step size {h} outside (0, 1/(4L)] = (0, {limit}]")]
    StepOutOfRange { h: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("discretization is structurally invalid: {0}")]
    InvalidDiscretization(String),

    #[error("discretization not admissible: {0:?}")]
    NotAdmissible(Vec<String>),

    #[error("invalid spline nodes: {0}")]
    InvalidSpline(String),

    #[error("query {t} outside spline domain [{lo}, {hi}]")]
    SplineDomain { t: f64, lo: f64, hi: f64 },

    #[error("invalid refinement ladder: {0}")]
    InvalidLadder(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
