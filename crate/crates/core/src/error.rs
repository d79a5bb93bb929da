use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs at least {min} points, got {n}")]
    GridTooSmall { n: usize, min: usize },

    #[error("field has {got} values but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids ({left} vs {right} points)")]
    GridMismatch { left: usize, right: usize },

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("admissibility violated: need rho > lambda0 * (1 - gamma), got rho = {rho} and lambda0 * (1 - gamma) = {bound}")]
    Admissibility { rho: f64, bound: f64 },

    #[error("no principal eigenpair for multiplication operator (sigma = 0)")]
    DegenerateOperator,

    #[error("power iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("non-finite state after step {step}")]
    NumericalBlowup { step: usize },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("delta too large for the construction (half-width {a} >= {max})")]
    DeltaTooLarge { a: f64, max: f64 },

    #[error("certificate search exhausted at c_star = {c_star:e}")]
    SearchExhausted { c_star: f64 },
}
