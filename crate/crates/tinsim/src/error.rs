//! Crate error type.

use thiserror::Error;

/// Everything that can go wrong while building budgets, running the oracle,
/// or fitting calibrations.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside its admissible domain.
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
        value: f64,
    },

    /// Two spectra that must share a frequency grid do not.
    #[error("frequency grid mismatch: {0}")]
    GridMismatch(String),

    /// A spectral operation would alias: the grid does not contain the
    /// support it needs.
    #[error("aliasing: {0}")]
    Aliasing(String),

    /// Spectral density input with negative area where a power is required.
    #[error("negative spectral area: {0}")]
    NegativeArea(String),

    /// Not enough samples / segments / points for the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The time-domain integration diverged (trajectory left the physical
    /// envelope), typically runaway backaction or feedback instability.
    #[error("instability at t = {time_s:.6} s: {reason}")]
    Instability { time_s: f64, reason: String },

    /// An iterative fit failed to converge or the data do not constrain it.
    #[error("fit failed: {0}")]
    FitFailed(String),

    /// A resonance needed by a fit or a measurement is not resolved on the
    /// available grid.
    #[error("unresolved peak: {0}")]
    UnresolvedPeak(String),

    /// Malformed scenario or record input.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
