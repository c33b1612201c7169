use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

/// Best iterate of a Newton solve that did not meet its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonFailure {
    /// Unknown vector `(λ, a_s, a_2s, …)` with the smallest residual seen.
    pub best: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("operator requires a zero-mean argument, got mean {mean:e}")]
    NonZeroMean { mean: f64 },
    #[error("strip depth kh must be positive and finite, got {kh}")]
    InvalidDepth { kh: f64 },
    #[error("pointwise map is singular at grid node {index}")]
    DomainFault { index: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("min Wkh = {min_wkh:e} is at or below the stagnation floor")]
    StagnantConfiguration { min_wkh: f64 },
    #[error("spectral tail {tail:e} exceeds bound {bound:e}")]
    AliasOverflow { tail: f64, bound: f64 },
    #[error("divided Bernoulli residual {residual:e} exceeds {bound:e}; the truncation does not resolve the solution")]
    Unresolved { residual: f64, bound: f64 },
    #[error("dispersion relation for mode {n} has no real roots")]
    ComplexRoots { n: usize },
    #[error("dispersion relation for mode {n} degenerates to a linear equation (root {linear_root:?})")]
    DegenerateQuadratic { n: usize, linear_root: Option<f64> },
    #[error("{} modes are singular at the same parameter value: {modes:?}", modes.len())]
    KernelOverflow { modes: Vec<usize> },
    #[error("lambda = {lambda} is not a root of any multiplier with n <= {n_max}")]
    NotABifurcationValue { lambda: f64, n_max: usize },
    #[error("multiplier of mode {n} does not change sign at lambda = {lambda} (double root)")]
    NoSignChange { n: usize, lambda: f64 },
    #[error("Newton did not converge after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    NoConvergence(Box<NewtonFailure>),
    #[error("Newton iterate {iteration} left the operator domain")]
    LeftDomain { iteration: usize, cause: Box<Error> },
    #[error("singular Newton system")]
    SingularJacobian,
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
