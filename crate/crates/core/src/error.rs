use thiserror::Error;

use crate::torsor::SpacePoint;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),

    #[error("instance too large: |G| = {order} exceeds cap {cap}")]
    InstanceTooLarge { order: u128, cap: u128 },

    #[error("foreign point: label {0} does not belong to this instance")]
    ForeignPoint(SpacePoint),

    #[error("twist unavailable: instance was built without the twist capability")]
    TwistUnavailable,

    #[error("implicit elements have mismatched base points")]
    MismatchedBase,

    #[error("majority vote needs an odd number of queries >= 1, got {0}")]
    InvalidVoteCount(usize),

    #[error("success probability must lie in (0, 1], got {0}")]
    InvalidSuccessProbability(f64),

    #[error("{backend} backend: domain of size {size} exceeds cap {cap}")]
    DomainTooLarge {
        backend: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("residue vector has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("residue outside the domain group")]
    ResidueOutOfRange,

    #[error("noisy oracle used for Fourier sampling without the experiment flag")]
    NoisyOracleNotPermitted,

    #[error("no lattice vector with unit last coordinate; more samples are needed")]
    NoUnitLastCoordinate,

    #[error("instance file secret does not match the instance regenerated from its seed")]
    SecretMismatch,

    #[error("reduction failed after {attempts} attempts")]
    ReductionFailed { attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
