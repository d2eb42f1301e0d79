use thiserror::Error;

use crate::field::Point;

/// Errors raised by the numerical modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid domain mask: {0}")]
    InvalidMask(String),
    #[error("negative density {value} at node {node}")]
    NegativeDensity { node: usize, value: f64 },
    #[error("negative atom weight {0}")]
    NegativeWeight(f64),
    #[error("bad exponent q = {0}; need q >= 1 or q = inf")]
    BadExponent(f64),
    #[error("bad smoothness alpha = {0}; need alpha > 0")]
    BadAlpha(f64),
    #[error("bad integrability p = {0}; need 1 < p < inf")]
    BadIntegrability(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel box too small: tail bound {tail:e} at radius {radius} exceeds {limit:e}")]
    BoxTooSmall { radius: f64, tail: f64, limit: f64 },
    #[error("grid spacing mismatch: {0:?} vs {1:?}")]
    SpacingMismatch([f64; 3], [f64; 3]),
    #[error("atom at {location:?} lies outside the grid box minus the kernel margin")]
    AtomOutsideBox { location: Point },
    #[error("(alpha, p) = ({alpha}, {p}) violates p <= d/alpha with d = {dim}")]
    SpecNotWolffValid { alpha: f64, p: f64, dim: usize },
    #[error("(alpha, p) = ({alpha}, {p}) violates the growth hypotheses in dimension {dim}")]
    SpecNotGrowthValid { alpha: f64, p: f64, dim: usize },
    #[error("radius rule invalid: {0}")]
    BadRadiusRule(String),
    #[error("pushforward has zero dual norm while the source measure does not")]
    DegenerateImage,
    #[error("declared Lipschitz constant {declared} violated: sampled ratio {sampled}")]
    LipschitzViolated { declared: f64, sampled: f64 },
    #[error("Newton iteration diverged after {iterations} iterations, residual {residual:e}")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailed(String),
    #[error("control infeasible: |u| = {value} at node {node}")]
    InfeasibleControl { node: usize, value: f64 },
    #[error("structural assumption violated: |grad phi| = {gradient:e} < kappa = {kappa:e} at {location:?}")]
    StructuralAssumptionViolated { location: Point, gradient: f64, kappa: f64 },
    #[error("hypothesis |psi(t)| >= k |t - gamma| violated at t = {t}")]
    HypothesisViolated { t: f64 },
    #[error("empty family: {0}")]
    EmptyFamily(String),
    #[error("basis_size {basis_size} exceeds facet count {facets}")]
    BasisTooLarge { basis_size: usize, facets: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
