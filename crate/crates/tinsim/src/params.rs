//! Physical parameters of the optomechanical system and the scalar
//! quantities derived from them.
//!
//! A mechanical mode is characterized by its effective mass m, angular
//! resonance frequency ω_m, energy decay rate Γ_m (FWHM of the displacement
//! spectrum), frequency-pull parameter G = ∂ω_c/∂x, bath temperature T and
//! damping model.  Derived scales:
//!
//! ```text
//!  x_zp = √(ħ / 2 m ω_m)            zero-point amplitude
//!  g₀   = G · x_zp                   vacuum optomechanical coupling
//!  n_th = k_B T / ħ ω_m              thermal phonon occupation
//!  C₀   = 4 g₀² / (κ Γ_m)            vacuum cooperativity
//! ```
//!
//! All rates are angular (rad/s).  Detunings are expressed through the
//! dimensionless ν = 2Δ/κ, so the intracavity Lorentzian is 1/(1 + ν²).

use serde::{Deserialize, Serialize};

use crate::constants::{C_LIGHT, HBAR, K_B, TWO_PI};
use crate::{Error, Result};

/// Below f_m/10⁴ the structural-damping enhancement ω_m/ω is held at 10⁴ so
/// the DC bin stays integrable on uniform grids.  The capped region carries
/// only ~ln(ω_m/ω)/Q of the thermal variance, and every analysis band sits
/// orders of magnitude above it.
pub(crate) const STRUCTURAL_DC_CAP: f64 = 1e4;

/// Mechanical dissipation model.
///
/// Viscous damping has a frequency-independent force noise; structural
/// (internal-friction) damping has a constant loss angle, so the force noise
/// scales as ω_m/ω and the displacement spectrum falls as 1/f below
/// resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    Viscous,
    Structural,
}

/// One mechanical mode coupled dispersively to the cavity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanicalMode {
    /// Effective mass [kg]
    pub mass_kg: f64,
    /// Angular resonance frequency ω_m [rad/s]
    pub omega_m: f64,
    /// Energy decay rate Γ_m [rad/s]
    pub gamma_m: f64,
    /// Frequency pull G = ∂ω_c/∂x [rad/s per m]
    pub coupling_g: f64,
    /// Bath temperature [K]
    pub temperature_k: f64,
    /// Dissipation model for the thermal force spectrum.
    pub damping: Damping,
}

impl MechanicalMode {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("omega_m", self.omega_m),
            ("gamma_m", self.gamma_m),
            ("temperature_k", self.temperature_k),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite and positive",
                    value,
                });
            }
        }
        if !self.coupling_g.is_finite() {
            return Err(Error::InvalidParameter {
                name: "coupling_g",
                reason: "must be finite",
                value: self.coupling_g,
            });
        }
        if self.gamma_m >= self.omega_m {
            return Err(Error::InvalidParameter {
                name: "gamma_m",
                reason: "mode must be underdamped (gamma_m < omega_m)",
                value: self.gamma_m,
            });
        }
        Ok(())
    }

    /// Resonance frequency in ordinary hertz.
    pub fn frequency_hz(&self) -> f64 {
        self.omega_m / TWO_PI
    }

    /// Mechanical quality factor Q = ω_m / Γ_m.
    pub fn quality_factor(&self) -> f64 {
        self.omega_m / self.gamma_m
    }

    /// Zero-point amplitude x_zp = √(ħ / 2 m ω_m) [m].
    pub fn zero_point_amplitude(&self) -> f64 {
        (HBAR / (2.0 * self.mass_kg * self.omega_m)).sqrt()
    }

    /// Vacuum optomechanical coupling g₀ = G · x_zp [rad/s].
    pub fn vacuum_coupling_rate(&self) -> f64 {
        self.coupling_g * self.zero_point_amplitude()
    }

    /// Thermal phonon occupation n_th = k_B T / ħ ω_m.
    pub fn thermal_occupation(&self) -> f64 {
        K_B * self.temperature_k / (HBAR * self.omega_m)
    }

    /// RMS thermal displacement x_th = √(k_B T / m ω_m²) [m].
    pub fn rms_thermal_displacement(&self) -> f64 {
        (K_B * self.temperature_k / (self.mass_kg * self.omega_m * self.omega_m)).sqrt()
    }

    /// One-sided thermal force spectral density S_F(f) [N²/Hz].
    ///
    /// Viscous: S_F = 4 k_B T m Γ_m, white.  Structural: the same value at
    /// resonance, scaled by ω_m/ω off resonance (constant loss angle).
    pub fn thermal_force_psd(&self, f_hz: f64) -> f64 {
        let white = 4.0 * K_B * self.temperature_k * self.mass_kg * self.gamma_m;
        match self.damping {
            Damping::Viscous => white,
            Damping::Structural => {
                let omega = TWO_PI * f_hz.abs();
                let enhancement = if omega > 0.0 {
                    (self.omega_m / omega).min(STRUCTURAL_DC_CAP)
                } else {
                    STRUCTURAL_DC_CAP
                };
                white * enhancement
            }
        }
    }
}

/// Driven cavity and detection parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CavityParams {
    /// Total linewidth κ (FWHM) [rad/s]
    pub kappa: f64,
    /// Laser detuning in units of the half linewidth, ν = 2Δ/κ.
    pub detuning_nu: f64,
    /// Mean intracavity photon number at the set detuning.
    pub n_cav: f64,
    /// Laser angular frequency ω_L [rad/s]
    pub omega_laser: f64,
    /// Overall detection efficiency η ∈ (0, 1].
    pub eta: f64,
}

impl CavityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: "must be finite and positive",
                value: self.kappa,
            });
        }
        if !self.detuning_nu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "detuning_nu",
                reason: "must be finite",
                value: self.detuning_nu,
            });
        }
        if !(self.n_cav >= 0.0) || !self.n_cav.is_finite() {
            return Err(Error::InvalidParameter {
                name: "n_cav",
                reason: "must be finite and non-negative",
                value: self.n_cav,
            });
        }
        if !(self.omega_laser > 0.0) || !self.omega_laser.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega_laser",
                reason: "must be finite and positive",
                value: self.omega_laser,
            });
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: "must lie in (0, 1]",
                value: self.eta,
            });
        }
        Ok(())
    }

    /// Detuning Δ = ν κ / 2 [rad/s].
    pub fn detuning_rad(&self) -> f64 {
        self.detuning_nu * self.kappa / 2.0
    }

    /// Intracavity Lorentzian 1/(1 + ν²) at a given normalized detuning.
    pub fn lorentzian(nu: f64) -> f64 {
        1.0 / (1.0 + nu * nu)
    }

    /// Photon number the cavity would hold on resonance at the same drive,
    /// n₀ = n_cav · (1 + ν²).
    pub fn resonant_photon_number(&self) -> f64 {
        self.n_cav * (1.0 + self.detuning_nu * self.detuning_nu)
    }

    /// Photon number at an arbitrary normalized detuning, same drive.
    pub fn photon_number_at(&self, nu: f64) -> f64 {
        self.resonant_photon_number() * Self::lorentzian(nu)
    }

    /// Intracavity photon number produced by an input power P [W] at the set
    /// detuning: n_c = 4 η P / (ħ ω_L κ (1 + ν²)).
    pub fn photon_number_from_power(&self, power_w: f64) -> f64 {
        4.0 * self.eta * power_w / (HBAR * self.omega_laser * self.kappa)
            * Self::lorentzian(self.detuning_nu)
    }

    /// Input power [W] required to hold `n_cav` photons at the set detuning.
    pub fn power_from_photon_number(&self, n_cav: f64) -> f64 {
        n_cav * (1.0 + self.detuning_nu * self.detuning_nu) * HBAR * self.omega_laser
            * self.kappa
            / (4.0 * self.eta)
    }
}

/// Laser angular frequency from vacuum wavelength [rad/s].
pub fn omega_laser_from_wavelength(lambda_m: f64) -> f64 {
    TWO_PI * C_LIGHT / lambda_m
}

/// The full system: mechanical modes, cavity, and which mode the phase
/// detector is calibrated against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemParams {
    pub modes: Vec<MechanicalMode>,
    pub cavity: CavityParams,
    /// Index of the mode used as displacement reference by the detector.
    pub probe_index: usize,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidParameter {
                name: "modes",
                reason: "at least one mechanical mode is required",
                value: 0.0,
            });
        }
        for mode in &self.modes {
            mode.validate()?;
        }
        self.cavity.validate()?;
        if self.probe_index >= self.modes.len() {
            return Err(Error::InvalidParameter {
                name: "probe_index",
                reason: "must index into modes",
                value: self.probe_index as f64,
            });
        }
        Ok(())
    }

    /// The mode the detector is calibrated against.
    pub fn probe(&self) -> &MechanicalMode {
        &self.modes[self.probe_index]
    }

    /// Vacuum cooperativity of mode `i`: C₀ = 4 g₀² / (κ Γ_m).
    pub fn vacuum_cooperativity(&self, i: usize) -> f64 {
        let g0 = self.modes[i].vacuum_coupling_rate();
        4.0 * g0 * g0 / (self.cavity.kappa * self.modes[i].gamma_m)
    }

    /// One-sided zero-point detuning-noise density of mode `i` at its
    /// resonance, S_ν^zp = (4 g₀² / Γ_m) / κ² = C₀/κ [1/Hz].
    pub fn zero_point_detuning_psd(&self, i: usize) -> f64 {
        self.vacuum_cooperativity(i) / self.cavity.kappa
    }
}
