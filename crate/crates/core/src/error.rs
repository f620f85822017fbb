use thiserror::Error;

/// Errors raised by model construction, conditioning and design search.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("bessel_k domain error: argument must be > 0, got {z}")]
    BesselDomain { z: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("design size {n} exceeds grid capacity {capacity}")]
    DesignTooLarge { n: usize, capacity: usize },

    #[error(
        "design covariance factorization failed at pivot {pivot} for design {design:?}; \
         the design covariance matrix is numerically singular"
    )]
    Factorization { design: Vec<usize>, pivot: usize },

    #[error(
        "posterior variance {value:.6e} at grid index {index} is more negative than the \
         round-off clamp allows; this indicates a conditioning bug, not round-off"
    )]
    NegativeVariance { index: usize, value: f64 },

    #[error("smoothed-reference weight is unbounded: sigma_eps_sq + posterior variance is zero")]
    UnboundedWeight,

    #[error("grid exhausted: {needed} unobserved points requested but only {available} remain")]
    GridExhausted { needed: usize, available: usize },

    #[error(
        "candidate design {design:?} already attains criterion value 0 (a perfect design); \
         the efficiency ratio is undefined"
    )]
    PerfectDesign { design: Vec<usize> },
}

pub type Result<T> = std::result::Result<T, Error>;
