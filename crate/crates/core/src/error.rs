use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no periodic orbit at energy level B = {b}: {reason}")]
    NoPeriodicOrbit { b: f64, reason: String },

    #[error("degenerate orbit at B = {0}: the level set collapses onto the center")]
    DegenerateOrbit(f64),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergence(String),

    #[error("no wave with period {period}: {reason}")]
    NoWaveForPeriod { period: f64, reason: String },

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e}, grid {n}): {detail}")]
    NewtonDivergence { iterations: usize, residual: f64, n: usize, detail: String },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("solvability error: {0}")]
    Solvability(String),

    #[error("no sign change of (L^-1 1, 1) for c in [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("degenerate kernel: dim ker R(k0) = {0}, expected 1")]
    DegenerateKernel(usize),

    #[error("eigenpair mismatch: residual {residual:e} exceeds {tolerance:e}")]
    Mismatch { residual: f64, tolerance: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    IntegratorStability { dt: f64, bound: f64 },

    #[error("unsupported schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
