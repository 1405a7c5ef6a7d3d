use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid convex body: {0}")]
    InvalidBody(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("body is not a lower set (violated at n = {n}, index {index:?}); the product formula requires it")]
    NotLowerSet { n: usize, index: Vec<usize> },

    #[error("degree of the zero polynomial is undefined (empty support)")]
    EmptySupport,

    #[error("point lies on the set: {0}")]
    Singular(String),

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("no multistart run converged (best value {best_value}, at {best_point:?})")]
    NoConvergence {
        best_value: f64,
        best_point: Vec<(f64, f64)>,
    },

    #[error("no sign change of the crossover function on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("function is not finite at a grid point {0:?} (pole on K?)")]
    NonFinite(Vec<f64>),

    #[error("analysis degree {m} too small; index set needs per-axis degree {needed}")]
    AnalysisDegreeTooSmall { m: usize, needed: usize },

    #[error("not enough usable rows for a rate fit ({usable} < 3)")]
    TooFewRows { usable: usize },

    #[error("mesh too coarse: {points} points, need at least {needed}")]
    MeshTooCoarse { points: usize, needed: usize },

    #[error("rank-deficient Vandermonde: basis column {column} has no remaining independent mesh row")]
    RankDeficient { column: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
