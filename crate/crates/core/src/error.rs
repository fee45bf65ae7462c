//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by simulator operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode index {index} out of range for {modes}-mode space")]
    ModeIndex { index: usize, modes: usize },

    #[error("Fock cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a single-mode state, got {0} modes")]
    NotSingleMode(usize),

    #[error("operation requires a two-mode state, got {0} modes")]
    NotTwoMode(usize),

    #[error("loss rate must be non-negative, got {0}")]
    NegativeRate(f64),

    #[error("adiabatic elimination denominator must be positive: dc^2 - |G|^2 = {0}")]
    NonPositiveDenominator(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("trace drift {drift:.3e} at t = {time} exceeds the per-step budget; reduce dt")]
    StepSizeRejected { time: f64, drift: f64 },

    #[error("modular grid too coarse: {points_per_box} quadrature points per box, need at least 20")]
    GridResolution { points_per_box: usize },

    #[error("modular index window captures only {captured:.6} of the momentum mass (need >= 0.999)")]
    WindowMass { captured: f64 },

    #[error("modular length must be set from a nonzero amplitude")]
    ZeroAmplitude,

    #[error("series is empty")]
    EmptySeries,

    #[error("no sign change of Q_max - 2 across the scanned range")]
    NoSignChange,

    #[error("sweep point {axis_value} failed: {source}")]
    SweepPoint {
        axis_value: f64,
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code category: config errors 2, numerics 3, resolution 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Io(_) => 2,
            Error::GridResolution { .. } | Error::WindowMass { .. } => 4,
            Error::SweepPoint { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
