//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by distribution, estimation, asymptotics and simulation
/// routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid argument (non-finite input, probability out of range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The number of upper order statistics `k` is out of range for the
    /// sample size `n` (requires `2 <= k < n`).
    #[error("invalid k: k={k}, n={n} (requires 2 <= k < n)")]
    InvalidK { k: usize, n: usize },

    /// A parameter/excess combination left the support of the generalized
    /// Pareto density, `1 + (gamma/sigma) y > 0`.
    #[error("support violation: 1 + (gamma/sigma) y <= 0 for some excess")]
    SupportViolation,

    /// Argument outside the domain of a profile function.
    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// The likelihood equations have no interior stationary point for this
    /// excess set (all excesses zero or constant).
    #[error("no interior solution: {0}")]
    NoInteriorSolution(String),

    /// The root search found no admissible stationary point.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// Moment ratios are degenerate (division by zero in an estimator).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Log-moment estimators need a strictly positive threshold order
    /// statistic.
    #[error("requires positive threshold: X_(n-k) = {0}")]
    RequiresPositiveThreshold(f64),

    /// Adaptive quadrature could not reach the requested error target.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// No number of upper order statistics realizes the requested bias
    /// level for this model and sample size.
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    /// A second-order model whose implied quantile function is not a valid
    /// (strictly decreasing in t) tail quantile.
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
