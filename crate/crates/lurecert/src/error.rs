use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants distinguish rejected inputs (bad data,
/// unusable plants) from internal numerical failures so callers can map them
/// to exit codes or retry policies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("denominator is empty or identically zero")]
    ZeroDenominator,
    #[error("coefficient is not finite: {value}")]
    NonFiniteCoefficient { value: f64 },
    #[error("improper transfer function: numerator degree {num_deg} exceeds denominator degree {den_deg}")]
    Improper { num_deg: usize, den_deg: usize },
    #[error("pole on the imaginary axis at omega = {omega}")]
    PoleOnAxis { omega: f64 },
    #[error("plant is not Hurwitz")]
    NotHurwitz,
    #[error("matrix exponential did not converge to a finite result")]
    MatrixExpDiverged,
    #[error("state-space realization failed its round-trip check: {0}")]
    Realization(String),
    #[error("multiplier pole must be positive and finite, got {value}")]
    NonPositivePole { value: f64 },
    #[error("multiplier gain is not finite: {value}")]
    NonFiniteGain { value: f64 },
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("shift {tau} is not an integer multiple of the sample step {dt}")]
    ShiftOffGrid { tau: f64, dt: f64 },
    #[error("operation requires a strictly proper plant")]
    BiproperPlant,
    #[error("alpha must be positive and finite, got {value}")]
    InvalidAlpha { value: f64 },
    #[error("slope class requires a slope bound alpha")]
    MissingAlpha,
    #[error("no certifiable slope found")]
    NoCertifiableSlope,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
