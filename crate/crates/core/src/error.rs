use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("point lies outside the lp ball: phi(x) = {phi} > theta = {theta}")]
    OutsideLpBall { phi: f64, theta: f64 },

    #[error("point lies in the interior of the lp ball (phi(x) = {phi} < theta = {theta}); use the smooth KKT conditions instead")]
    InteriorOfLpBall { phi: f64, theta: f64 },

    #[error("point is infeasible for the constraint set (violation {violation:e})")]
    Infeasible { violation: f64 },

    #[error("unsupported-exact-subproblem: no built-in exact solver for general smooth constraint sets; register a subproblem oracle")]
    UnsupportedExactSubproblem,

    #[error("subproblem stationarity violated at iteration {iteration}: residual {residual:e} > tolerance {tolerance:e}")]
    StationarityViolation {
        iteration: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("descent violated at iteration {iteration}: slack {slack:e} below -{tolerance:e} (wrong Lipschitz constant or inexact subproblem)")]
    DescentViolation {
        iteration: usize,
        slack: f64,
        tolerance: f64,
    },

    #[error("power iteration did not converge after {iterations} iterations (best Rayleigh bound {bound})")]
    PowerIterationNotConverged { iterations: usize, bound: f64 },

    #[error("negative multiplier for inequality constraint {index}: {value}")]
    NegativeMultiplier { index: usize, value: f64 },

    #[error("sequence has not converged to the supplied limit: distance {distance:e}")]
    NotConverged { distance: f64 },

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,
}
