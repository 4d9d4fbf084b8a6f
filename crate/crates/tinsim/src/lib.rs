//! Predictive noise engine for multimode cavity optomechanics.
//!
//! A membrane (or any multimode mechanical element) dispersively coupled to a
//! driven cavity imprints its thermal motion on the cavity detuning,
//!
//! ```text
//!  ν(t) = 2 G x(t) / κ,        G = ∂ω_c/∂x
//! ```
//!
//! and the cavity Lorentzian transduces ν(t) into the output light
//! *nonlinearly*.  The quadratic term mixes every pair of mechanical modes and
//! produces a broadband intensity-noise floor — thermal intermodulation noise
//! (TIN) — that can dominate shot noise by orders of magnitude at room
//! temperature, along with an associated radiation-pressure backaction that
//! heats the mechanics.  This crate computes:
//!
//! * the full analytic noise budget (shot, linear transduction, TIN) on a
//!   common frequency grid,
//! * the TIN backaction force and the resulting quantum cooperativity C_q,
//!   including the photon-number optimum and the detuning dependence with its
//!   "magic" zeros at ν = ±1/√3,
//! * design landscapes of C_q over photon number × linewidth × temperature,
//! * calibration fits that recover g₀, photon number, detection efficiency,
//!   and per-mode thermal parameters from measured records,
//!
//! and validates all of it against an independent time-domain Langevin oracle
//! (exact exponential integrator, no small-step approximation of the damped
//! oscillator propagator) through Welch spectral estimates.
//!
//! Spectral conventions, fixed crate-wide: all stored spectra are one-sided
//! densities per ordinary hertz (variance = ∫ S df); rates (κ, Γ, ω) are
//! angular (rad/s) internally, with conversion to Hz only at I/O boundaries.

pub mod backaction;
pub mod calibration;
pub mod constants;
pub mod error;
pub mod oracle;
pub mod params;
pub mod scenario;
pub mod spectra;
pub mod transduction;
pub mod verify;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
