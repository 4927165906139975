use thiserror::Error;

/// Errors raised by the solvers and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DickeError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("subluminal motion required: xi = {xi} must satisfy 0 <= xi < 1")]
    Superluminal { xi: f64 },

    #[error("critical detector number undefined: the effective coupling is zero")]
    ZeroCoupling,

    #[error("{what} of size {size} exceeds the supported limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("state is not permutation symmetric (deviation {deviation:.3e})")]
    NotPermutationSymmetric { deviation: f64 },

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("cavity truncation violated: top Fock level population {population:.3e} at t = {time}")]
    Truncation { population: f64, time: f64 },

    #[error("positivity violated: minimum eigenvalue {min_eigenvalue:.3e} at t = {time}; tighten the integrator tolerances")]
    Positivity { min_eigenvalue: f64, time: f64 },

    #[error("integration failed at t = {time}: {reason}")]
    Integrator { time: f64, reason: String },

    #[error("moment divergence at t = {time}: photon number {photons:.3e}")]
    Divergence { time: f64, photons: f64 },

    #[error("Fano factor undefined for mean photon number {mean:.3e}")]
    UndefinedFano { mean: f64 },

    #[error("Wigner grid does not capture the state: discrete normalization {normalization}")]
    WignerNormalization { normalization: f64 },

    #[error("degenerate denominator: N (gamma_c + gamma_d) = gamma_c")]
    DegenerateDenominator,

    #[error("steady-state Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("parametric instability: 4 N lambda^2 = {drive:.6e} >= gamma_c gamma_d = {damping:.6e}")]
    ParametricInstability { drive: f64, damping: f64 },

    #[error("insufficient data for fit: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, DickeError>;
