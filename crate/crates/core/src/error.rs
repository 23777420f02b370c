use thiserror::Error;

/// Errors surfaced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gamma function pole at x = {0}")]
    Pole(f64),
    #[error("series not converged after {terms} terms (estimated error {estimate:e})")]
    NotConverged { terms: usize, estimate: f64 },
    #[error("series and contour routes disagree at z = {z}: {series} vs {contour}")]
    RouteDisagreement { z: f64, series: f64, contour: f64 },
    #[error("argument {0} lies on the branch cut of the Laplace symbol")]
    BranchCut(String),
    #[error("Laplace symbol denominator vanishes at s = {0}")]
    SingularSymbol(String),
    #[error("contour crosses the branch cut: real-axis crossing {crossing} <= {branch_point}")]
    ContourIntersectsBranchCut { crossing: f64, branch_point: f64 },
    #[error("contour quadrature did not converge under node doubling (difference {difference:e})")]
    NonConvergedQuadrature { difference: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("incomplete gamma evaluation failed for s = {s}, x = {x}")]
    MomentIntegralFailure { s: f64, x: f64 },
    #[error("implicit step {step} has nonpositive coefficient {coefficient}")]
    StepSingular { step: usize, coefficient: f64 },
    #[error("grid incompatible with resolvent table: {0}")]
    GridIncompatible(String),
    #[error("sub-iteration diverged at t = {t} (residual {residual:e})")]
    SubIterationDiverged { t: f64, residual: f64 },
    #[error("quadrature did not reach tolerance (last change {change:e})")]
    QuadratureNotConverged { change: f64 },
    #[error("duality map of a vanishing function (norm {norm:e})")]
    ZeroVector { norm: f64 },
    #[error("fixed-point iteration diverged or stagnated (residual {residual:e})")]
    FixedPointDiverged { residual: f64 },
    #[error("Picard iteration not converged after {iterations} iterations (last update {update:e})")]
    PicardNotConverged { iterations: usize, update: f64 },
    #[error("{what} violated: {lhs:e} > {rhs:e}")]
    BoundViolated { what: String, lhs: f64, rhs: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
