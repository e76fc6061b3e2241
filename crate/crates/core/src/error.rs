use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero of J_{order} (index {index}) did not converge after {iterations} iterations: last iterate {last}, |J| = {residual:e}")]
    ZeroConvergence {
        order: f64,
        index: usize,
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("quadrature did not reach tolerance: estimated error {estimate:e} > {tol:e} ({context})")]
    Quadrature {
        estimate: f64,
        tol: f64,
        context: String,
    },

    #[error("Gram matrix condition number {condition:e} exceeds {limit:e}; largest admissible N for T = {horizon} is {max_modes}")]
    Conditioning {
        condition: f64,
        limit: f64,
        horizon: f64,
        max_modes: usize,
    },

    #[error("biorthogonal residual {residual:e} exceeds tolerance {tol:e}")]
    Accuracy { residual: f64, tol: f64 },

    #[error("target stiffness: mu_T * exp(lambda T) overflows at mode {mode} (log magnitude {log_magnitude:.1})")]
    TargetStiffness { mode: usize, log_magnitude: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
