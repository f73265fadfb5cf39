use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrssError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mean spin vanishes; squeezing direction is undefined")]
    UndefinedDirection,

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("ill-conditioned steady-state problem (log10 condition estimate {log10_condition:.1})")]
    IllConditioned { log10_condition: f64 },

    #[error("steady state is not unique (independent starts differ by trace distance {distance:e})")]
    DegenerateSteadyState { distance: f64 },

    #[error("j = {j} exceeds the cap {cap} for the vectorized Liouvillian path")]
    CapExceeded { j: f64, cap: f64 },

    #[error("unsupported path: {0}")]
    Unsupported(String),

    #[error("integrator failed: {0}")]
    Integrator(String),
}

pub type Result<T> = std::result::Result<T, CrssError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(CrssError::Domain(msg.into()))
}
