use thiserror::Error;

/// Problems with a vortex configuration or the admissible parameter range.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("beta interval empty: N - M = {0}, need N - M >= 2")]
    BetaIntervalEmpty(i64),
    #[error("separation violation: centers {distance} apart cannot hold disjoint balls of radius {varrho}")]
    SeparationViolation { distance: f64, varrho: f64 },
    #[error("varrho = {0} must lie in (0, 1)")]
    VarrhoRange(f64),
    #[error("r0 = {r0} is below the minimum 4e = {min}")]
    R0TooSmall { r0: f64, min: f64 },
    #[error("r0 = {r0} does not enclose the ball of radius {varrho} around a center at distance {distance}")]
    R0NotEnclosing { r0: f64, varrho: f64, distance: f64 },
    #[error("beta out of open interval (2, {upper}): got {beta}")]
    BetaOutOfInterval { beta: f64, upper: f64 },
    #[error("non-finite coordinate in configuration")]
    NonFinite,
    #[error("config file: {0}")]
    Parse(String),
}

/// Problems building a computational grid.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("radial path requires coincident vortices at the origin")]
    RadialRequiresCoincident,
    #[error("rmax = {r_max} is below the required 4 r0 = {required}")]
    DomainTooSmall { r_max: f64, required: f64 },
    #[error("h too coarse for cutoff annulus: h = {h} > varrho / 8 = {limit}")]
    TooCoarse { h: f64, limit: f64 },
    #[error("memory guard: estimated {nodes} nodes exceeds cap {cap}")]
    NodeCap { nodes: usize, cap: usize },
    #[error("grid needs at least {min} nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("invalid grid parameter: {0}")]
    Invalid(String),
}

/// Failures of the linear or nonlinear solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("not a valid super/sub-solution at discrete level (iteration {iteration}, violation {violation:e})")]
    NotMonotone { iteration: usize, violation: f64 },
    #[error("linear solve failed at iteration {iteration}: {reason}")]
    Linear { iteration: usize, reason: String },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Newton line search stagnated at iteration {iteration}")]
    Stagnation { iteration: usize },
    #[error("quadrature under-resolved: relative mass defect {defect:e} exceeds {limit:e}; try a smaller h")]
    UnderResolved { defect: f64, limit: f64 },
    #[error("construction failed at this resolution: {side} padding exceeds cap {cap}")]
    PaddingCap { side: &'static str, cap: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Failures in the far-field and endpoint analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("annulus [{r_in}, {r_out}] lies outside the grid (rmax = {r_max})")]
    AnnulusOutsideGrid { r_in: f64, r_out: f64, r_max: f64 },
    #[error("window too far out: |v - b| below noise floor {floor:e}")]
    BelowNoiseFloor { floor: f64 },
    #[error("tail extrapolation unstable (fit residual {residual:.3}); increase rmax")]
    TailUnstable { residual: f64 },
    #[error("precondition: {0}")]
    Precondition(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Evaluation of a profile outside its domain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("rho is defined for t > 0, got t = {0}")]
    Domain(f64),
    #[error("cutoff blend not monotone: min slope {0:e} on (1/2, 1)")]
    NotMonotone(f64),
}

impl From<GridError> for AnalysisError {
    fn from(e: GridError) -> Self {
        AnalysisError::Solve(e.into())
    }
}

impl From<ConfigError> for AnalysisError {
    fn from(e: ConfigError) -> Self {
        AnalysisError::Solve(e.into())
    }
}
