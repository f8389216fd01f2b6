use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error(
        "window too wide: tau * gamma_a * gamma_b = {lhs} must be < gamma_a + gamma_b = {rhs}"
    )]
    WindowTooWide { lhs: f64, rhs: f64 },

    #[error("compatibility solve did not converge after {iterations} iterations (residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("integration produced a non-finite value at t = {t}")]
    IntegrationBlowup { t: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("model inapplicable: {0}")]
    ModelInapplicable(String),

    #[error("degenerate antisymmetrization: 2 - 2 Re<psi(x,y)|psi(y,x)> = {denominator:e} is below {threshold:e}")]
    DegenerateAntisymmetrization { denominator: f64, threshold: f64 },

    #[error("grid too small: boundary amplitude {leakage:e} exceeds {limit:e}")]
    GridTooSmall { leakage: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
