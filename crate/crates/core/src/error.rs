use thiserror::Error;

/// Errors produced by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum RydError {
    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate interaction configuration: {0}")]
    Degenerate(String),

    #[error("system size {0} exceeds the exact-propagation capacity (N <= {1})")]
    Capacity(usize, usize),

    #[error("trace drift {drift:.3e} exceeds tolerance {tol:.1e} at t = {t:.4}; step size too large")]
    TraceDrift { drift: f64, tol: f64, t: f64 },

    #[error("Jacobian ill-conditioned: finite-difference stencils disagree by {0:.3e}")]
    IllConditioned(f64),

    #[error("no fixed point found (flow must have at least one)")]
    NoFixedPoint,

    #[error("series is not periodic: {0} peaks detected, need at least 3")]
    NotPeriodic(usize),

    #[error("series too short: need at least {needed} samples after transient, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("mixed sample spacing across inputs: {0:.6e} vs {1:.6e}")]
    MixedDt(f64, f64),

    #[error("all sites have undefined relative fraction")]
    AllUndefined,

    #[error("missing spectral peak for size N = {0}")]
    MissingPeak(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RydError>;
