use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential support {support} does not fit inside radius {radius}")]
    SupportViolation { support: f64, radius: f64 },

    #[error("spectral point must satisfy z < 0, got {0}")]
    InvalidSpectralPoint(f64),

    #[error("boundary correction is singular at z = {z} (b = {b}): z hits an eigenvalue of the background operator")]
    SingularCorrection { z: f64, b: f64 },

    #[error("coefficient pole: {0}")]
    Pole(String),

    #[error("spectral-point check failed: {0}")]
    SpectralPoint(String),

    #[error("no attractive eigenvalue found; potential admits no resonance tuning")]
    NoResonance,

    #[error("resonance eigenvalue is degenerate (simplicity gap {gap:.3e} below {threshold:.1e})")]
    DegenerateResonance { gap: f64, threshold: f64 },

    #[error("resonance eigenfunction is orthogonal to v (overlap {overlap:.3e}); the limit is the free operator")]
    OrthogonalResonance { overlap: f64 },

    #[error("density is not normalized: mass = {mass}")]
    Normalization { mass: f64 },

    #[error("iteration failed to converge after {iterations} steps (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("rate fit needs at least {needed} points, got {got}")]
    FitUnderdetermined { needed: usize, got: usize },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
