//! Mechanical response and thermal spectra.
//!
//! Each mode responds to force with the susceptibility
//!
//! ```text
//!  χ(ω) = 1 / ( m (ω_m² − ω² − i Γ(ω) ω) )
//! ```
//!
//! with Γ(ω) = Γ_m for viscous damping and Γ(ω) = Γ_m ω_m/ω for structural
//! damping (constant loss angle).  Driving χ with the thermal force density
//! of the same model satisfies the fluctuation–dissipation theorem, so the
//! integrated displacement spectrum reproduces equipartition.

use num_complex::Complex64;

use super::grid::FrequencyGrid;
use super::psd::{Psd, PsdUnits};
use crate::constants::TWO_PI;
use crate::params::{Damping, MechanicalMode, SystemParams};
use crate::Result;

/// Mechanical susceptibility χ(2πf) [m/N].
pub fn mechanical_susceptibility(mode: &MechanicalMode, f_hz: f64) -> Complex64 {
    let omega = TWO_PI * f_hz;
    let gamma = match mode.damping {
        Damping::Viscous => mode.gamma_m,
        Damping::Structural => {
            let enhancement = if omega > 0.0 {
                (mode.omega_m / omega).min(crate::params::STRUCTURAL_DC_CAP)
            } else {
                crate::params::STRUCTURAL_DC_CAP
            };
            mode.gamma_m * enhancement
        }
    };
    let denom = Complex64::new(
        mode.mass_kg * (mode.omega_m * mode.omega_m - omega * omega),
        -mode.mass_kg * gamma * omega,
    );
    1.0 / denom
}

/// One-sided thermal displacement spectrum S_x(f) = S_F(f) |χ(2πf)|² [m²/Hz].
pub fn thermal_displacement_psd(mode: &MechanicalMode, grid: FrequencyGrid) -> Result<Psd> {
    Psd::from_fn(grid, PsdUnits::DisplacementSq, |f| {
        mode.thermal_force_psd(f) * mechanical_susceptibility(mode, f).norm_sqr()
    })
}

/// One-sided normalized-detuning spectrum of the whole mode family,
/// S_ν(f) = Σ_i (2 G_i/κ)² S_x,i(f)  [1/Hz].
///
/// Baths of different modes are independent, so contributions add
/// incoherently.
pub fn detuning_noise_psd(system: &SystemParams, grid: FrequencyGrid) -> Result<Psd> {
    let kappa = system.cavity.kappa;
    Psd::from_fn(grid, PsdUnits::FrequencyNoise, |f| {
        system
            .modes
            .iter()
            .map(|mode| {
                let t = 2.0 * mode.coupling_g / kappa;
                t * t * mode.thermal_force_psd(f)
                    * mechanical_susceptibility(mode, f).norm_sqr()
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{K_B, TWO_PI};
    use crate::params::{CavityParams, Damping, MechanicalMode};
    use approx::assert_relative_eq;

    fn test_mode(damping: Damping) -> MechanicalMode {
        MechanicalMode {
            mass_kg: 1e-9,
            omega_m: TWO_PI * 1000.0,
            gamma_m: TWO_PI * 1000.0 / 100.0,
            coupling_g: 1e14,
            temperature_k: 298.0,
            damping,
        }
    }

    #[test]
    fn susceptibility_limits() {
        let m = test_mode(Damping::Viscous);
        // DC: compliance 1/(m ω_m²).
        let dc = mechanical_susceptibility(&m, 0.0);
        assert_relative_eq!(
            dc.re,
            1.0 / (m.mass_kg * m.omega_m * m.omega_m),
            max_relative = 1e-12
        );
        // Resonance: purely imaginary, |χ| = Q/(m ω_m²).
        let res = mechanical_susceptibility(&m, 1000.0);
        assert!(res.re.abs() < 1e-6 * res.im.abs());
        assert_relative_eq!(
            res.norm(),
            m.quality_factor() / (m.mass_kg * m.omega_m * m.omega_m),
            max_relative = 1e-9
        );
    }

    #[test]
    fn integrated_thermal_spectrum_satisfies_equipartition() {
        let m = test_mode(Damping::Viscous);
        let grid = FrequencyGrid::new(0.0, 0.02, 1_000_001).unwrap();
        let psd = thermal_displacement_psd(&m, grid).unwrap();
        let var = psd.total_power();
        let expected = K_B * m.temperature_k / (m.mass_kg * m.omega_m * m.omega_m);
        assert_relative_eq!(var, expected, max_relative = 5e-3);

        // Constant loss angle piles extra weight below resonance (the
        // logarithmic 1/f region): a few ln(ω_m/ω_c)/Q above equipartition.
        let s = test_mode(Damping::Structural);
        let structural = thermal_displacement_psd(&s, grid).unwrap().total_power();
        let ratio = structural / expected;
        assert!(
            (1.0..1.10).contains(&ratio),
            "structural/equipartition ratio {ratio}"
        );
    }

    #[test]
    fn detuning_noise_sums_modes_incoherently() {
        let mode = test_mode(Damping::Viscous);
        let cavity = CavityParams {
            kappa: TWO_PI * 1e6,
            detuning_nu: 0.0,
            n_cav: 1e6,
            omega_laser: crate::params::omega_laser_from_wavelength(786e-9),
            eta: 0.4,
        };
        let one = crate::params::SystemParams {
            modes: vec![mode.clone()],
            cavity: cavity.clone(),
            probe_index: 0,
        };
        let two = crate::params::SystemParams {
            modes: vec![mode.clone(), mode.clone()],
            cavity,
            probe_index: 0,
        };
        let grid = FrequencyGrid::new(0.0, 0.5, 8001).unwrap();
        let s1 = detuning_noise_psd(&one, grid).unwrap();
        let s2 = detuning_noise_psd(&two, grid).unwrap();
        assert_relative_eq!(s2.total_power(), 2.0 * s1.total_power(), max_relative = 1e-12);

        // Scale check: peak of (2G/κ)² S_x at resonance.
        let sx = thermal_displacement_psd(&mode, grid).unwrap();
        let t = 2.0 * mode.coupling_g / one.cavity.kappa;
        assert_relative_eq!(
            s1.value_at(1000.0).unwrap(),
            t * t * sx.value_at(1000.0).unwrap(),
            max_relative = 1e-12
        );
    }
}
