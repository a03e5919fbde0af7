use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid photon count {0}: need at least 1")]
    InvalidPhotonCount(i64),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("negative propagation distance z = {0}")]
    NegativeDistance(f64),

    #[error("z = {z} lies within {w:e} of a pole of the factorization (|w| < {threshold:e})")]
    PoleProximity { z: f64, w: f64, threshold: f64 },

    #[error("not at the exceptional point: |Δλ|·z = {0:e}")]
    NotAtExceptionalPoint(f64),

    #[error("matrix exponential argument too large: ‖A‖₁ = {norm:e} exceeds {bound:e}")]
    ExponentialOverflow { norm: f64, bound: f64 },

    #[error("eigensolver did not converge")]
    EigensolverFailed,

    #[error("Riccati blow-up near z ≈ {z_estimate} (integration stopped at z = {z_reached})")]
    RiccatiBlowUp { z_estimate: f64, z_reached: f64 },

    #[error("ODE grid must start at 0 and be ascending")]
    InvalidGrid,

    #[error("state is not normalized: ‖ψ‖ = {0}")]
    NotNormalized(f64),

    #[error("state vector cannot be normalized (zero norm)")]
    ZeroState,

    #[error("post-selected weight underflowed at z = {0}")]
    WeightUnderflow(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no period found in occupation dynamics")]
    NoPeriodFound,
}
