//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("no sign change of the shooting dichotomy indicator in [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("bisection stalled at bracket width {width} (requested {tol})")]
    ToleranceNotReached { width: f64, tol: f64 },
    #[error("tabulated tail too short for requested quadrature tolerance (need r <= {needed}, have {available})")]
    QuadratureDivergence { needed: f64, available: f64 },
    #[error("coupling beta={beta} outside admissible set (-sqrt(mu1*mu2), min(mu1,mu2)) U (max(mu1,mu2), inf)")]
    InadmissibleBeta { beta: f64 },
    #[error("tail fit window has only {count} usable samples (need >= 10)")]
    FitDegenerate { count: usize },
    #[error("separation d={d} exceeds resolvable tail range {max}")]
    TailUnderflow { d: f64, max: f64 },
    #[error("potential floor violated: min value {min} at r={at}")]
    FloorViolation { min: f64, at: f64 },
    #[error("evaluate(r)-1 changes sign on the fit window near r={at}")]
    SignChange { at: f64 },
    #[error("segregated configuration requires a second ring radius rho")]
    MissingRho,
    #[error("reduced-energy maximizer attained at window {side} endpoint r={at}")]
    BoundaryMaximizer { side: &'static str, at: f64 },
    #[error("field leaks through the box: boundary max {boundary} vs peak {peak}")]
    BoxTooSmall { boundary: f64, peak: f64 },
    #[error("Newton stalled: residual {residual} after {iterations} iterations (tol {tol})")]
    NewtonStall { residual: f64, iterations: usize, tol: f64 },
    #[error("line search failed to reduce the residual at iteration {iteration}")]
    LineSearchFailure { iteration: usize },
    #[error("discrete constraint functionals are rank deficient (norm {norm})")]
    ConstraintRankDeficiency { norm: f64 },
    #[error("projected iteration failed to contract: ratio {ratio} >= 0.9")]
    NonContraction { ratio: f64 },
    #[error("base solution residual {residual} too large for linearization (need <= {max})")]
    UnconvergedBase { residual: f64, max: f64 },
    #[error("shift-invert solve failed to converge (residual {residual})")]
    SingularShift { residual: f64 },
    #[error("ball B_{delta}({center:?}) clipped by the grid box")]
    DomainClipped { center: [f64; 3], delta: f64 },
    #[error("config error at `{field}`: {message}")]
    ConfigError { field: String, message: String },
    #[error("task `{task}` failed: {source}")]
    TaskError {
        task: String,
        #[source]
        source: Box<Error>,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
