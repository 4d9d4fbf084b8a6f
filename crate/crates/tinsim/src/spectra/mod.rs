//! Spectral containers and estimators.
//!
//! Everything here shares one convention: spectra are one-sided densities
//! per ordinary hertz on uniform grids, so band and total powers are plain
//! ∫ S df integrals.

pub mod budget;
pub mod convolve;
pub mod grid;
pub mod psd;
pub mod response;
pub mod welch;

pub use budget::NoiseBudget;
pub use convolve::{self_convolve, SELF_CONVOLUTION_PREFACTOR};
pub use grid::FrequencyGrid;
pub use psd::{db, Psd, PsdUnits};
pub use response::{detuning_noise_psd, mechanical_susceptibility, thermal_displacement_psd};
pub use welch::{coherence, welch_psd, CoherenceEstimate, WelchConfig, WelchEstimate, Window};
