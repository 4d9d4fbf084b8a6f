//! Physical constants (2018 CODATA exact values).

/// Reduced Planck constant ħ [J·s]
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant k_B [J/K]
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum c [m/s]
pub const C_LIGHT: f64 = 299_792_458.0;

/// 2π, for angular-frequency ↔ ordinary-frequency conversions.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
