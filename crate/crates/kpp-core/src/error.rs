use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("coefficient out of domain: {0}")]
    CoefficientDomain(String),

    #[error("eigen-iteration did not converge after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("failed to bracket {what} on [{lo}, {hi}]")]
    Bracketing { what: &'static str, lo: f64, hi: f64 },

    #[error("numerically defective null space: second singular value {second:.3e} below separation threshold {threshold:.3e}")]
    DegenerateNullSpace { second: f64, threshold: f64 },

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),

    #[error("scheme produced values outside [{lo:.1e}, 1+{hi:.1e}] at t = {t}; reduce dt")]
    Stability { t: f64, lo: f64, hi: f64 },

    #[error("solution support reached the sponge zone at t = {t}; rerun with width >= {suggested_width}")]
    DomainTooSmall { t: f64, suggested_width: f64 },

    #[error("ill-posed configuration: {0}")]
    IllPosedConfig(String),

    #[error("relaxation did not reach a fixed point: {0}")]
    Relaxation(String),

    #[error("front position undefined inside the fit window at t = {t}")]
    DataGap { t: f64 },

    #[error("non-positive value in fit window at t = {t}")]
    FitDomain { t: f64 },

    #[error("population exceeded {cap} particles at t = {t}{}", trial.map(|k| format!(" (trial {k})")).unwrap_or_default())]
    Explosion { t: f64, cap: usize, trial: Option<usize> },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
