//! How the cavity Lorentzian turns detuning fluctuations into intensity
//! fluctuations.
//!
//! With the transmitted fraction T(ν) = 1/(1+ν²) and a fluctuation δν around
//! the set point ν₀, the relative intensity expands as
//!
//! ```text
//!  δT/T₀ = c₁ δν + c₂ δν² + c₃ δν³ + …
//!  c₁ = −2ν/(1+ν²)
//!  c₂ = (3ν² − 1)/(1+ν²)²
//!  c₃ = 4ν(1 − ν²)/(1+ν²)³
//! ```
//!
//! The quadratic coefficient vanishes at ν = ±1/√3 — the magic detunings —
//! leaving only the cubic residual of the intermodulation noise.  The
//! linear term vanishes on resonance, which is why thermal intermodulation
//! noise dominates the resonant intensity spectrum.

use crate::constants::TWO_PI;
use crate::params::SystemParams;
use crate::spectra::{self_convolve, FrequencyGrid, NoiseBudget, Psd, PsdUnits};
use crate::{Error, Result};

/// Detuning ν = 1/√3 where the quadratic transduction coefficient vanishes.
pub const MAGIC_DETUNING: f64 = 0.577_350_269_189_625_8;

/// Relative-intensity expansion coefficients (c₁, c₂, c₃) at set point `nu`.
pub fn expansion_coefficients(nu: f64) -> (f64, f64, f64) {
    let u = 1.0 + nu * nu;
    let c1 = -2.0 * nu / u;
    let c2 = (3.0 * nu * nu - 1.0) / (u * u);
    let c3 = 4.0 * nu * (1.0 - nu * nu) / (u * u * u);
    (c1, c2, c3)
}

/// One-sided shot-noise RIN of the detected light [1/Hz]:
/// S_shot(f) = (8/(n_c κ)) / (1 + 4((ω + Δ)/κ)²), ω = 2πf.
///
/// `n_cav` is the photon number held at the set detuning; the denominator is
/// the cavity filter around the displaced carrier.
pub fn shot_rin_psd(
    n_cav: f64,
    kappa: f64,
    nu: f64,
    grid: FrequencyGrid,
) -> Result<Psd> {
    let delta = nu * kappa / 2.0;
    Psd::from_fn(grid, PsdUnits::Rin, |f| {
        let omega = TWO_PI * f;
        let s = (omega + delta) / kappa;
        8.0 / (n_cav * kappa) / (1.0 + 4.0 * s * s)
    })
}

/// Linearly transduced RIN, c₁² S_ν [1/Hz].
pub fn linear_rin_psd(s_nu: &Psd, nu: f64) -> Result<Psd> {
    let (c1, _, _) = expansion_coefficients(nu);
    Psd::new(
        s_nu.grid,
        s_nu.values.iter().map(|v| c1 * c1 * v).collect(),
        PsdUnits::Rin,
    )
}

/// Thermal intermodulation RIN, c₂² · S_{ν²} [1/Hz], where S_{ν²} is the
/// Gaussian-squared spectrum of the detuning noise.
pub fn tin_rin_psd(s_nu: &Psd, nu: f64, correction: f64) -> Result<Psd> {
    let (_, c2, _) = expansion_coefficients(nu);
    let squared = self_convolve(s_nu, correction)?;
    Psd::new(
        squared.grid,
        squared.values.iter().map(|v| c2 * c2 * v).collect(),
        PsdUnits::Rin,
    )
}

/// Full intensity-noise budget at the cavity output: shot, linear
/// transduction, and thermal intermodulation on a common grid.
///
/// Detection efficiency is *not* folded in here; the calibration layer owns
/// the detector.
pub fn intensity_noise_budget(
    system: &SystemParams,
    grid: FrequencyGrid,
    correction: f64,
) -> Result<NoiseBudget> {
    let s_nu = crate::spectra::detuning_noise_psd(system, grid)?;
    let nu = system.cavity.detuning_nu;
    let mut budget = NoiseBudget::new();
    budget.push(
        "shot",
        shot_rin_psd(system.cavity.n_cav, system.cavity.kappa, nu, grid)?,
    )?;
    budget.push("linear", linear_rin_psd(&s_nu, nu)?)?;
    budget.push("tin", tin_rin_psd(&s_nu, nu, correction)?)?;
    Ok(budget)
}

/// Transmission trace of a detuning sweep at rate ν̇ [1/s] across a mode
/// oscillating at ω_m [rad/s] with detuning amplitude A:
/// P(ν) = 1/(1 + (ν + A cos(ω_m ν/ν̇ + φ))²).
pub fn swept_transmission(
    nu: &[f64],
    nu_rate: f64,
    omega_m: f64,
    amp_nu: f64,
    phase: f64,
) -> Vec<f64> {
    nu.iter()
        .map(|&v| {
            let wiggle = amp_nu * (omega_m * v / nu_rate + phase).cos();
            let total = v + wiggle;
            1.0 / (1.0 + total * total)
        })
        .collect()
}

/// Result of fitting a swept transmission trace.
#[derive(Debug, Clone)]
pub struct SweepFit {
    /// Modulation depth in detuning units.
    pub amp_nu: f64,
    pub phase_rad: f64,
    /// RMS misfit of the normalized transmission.
    pub residual_rms: f64,
}

/// Recover the detuning-modulation depth from a swept transmission trace.
///
/// Fits (amplitude, phase) of the [`swept_transmission`] model by damped
/// least squares, seeding the phase from a coarse grid so the oscillatory
/// cost surface cannot trap the solver, and tolerating an initial amplitude
/// guess that is off by a factor of a few.
pub fn fit_swept_transmission(
    nu: &[f64],
    transmission: &[f64],
    nu_rate: f64,
    omega_m: f64,
    amp_guess: f64,
) -> Result<SweepFit> {
    if nu.len() != transmission.len() {
        return Err(Error::GridMismatch(format!(
            "{} detunings vs {} transmission samples",
            nu.len(),
            transmission.len()
        )));
    }
    if nu.len() < 16 {
        return Err(Error::InsufficientData(
            "sweep trace too short to constrain the modulation".into(),
        ));
    }
    if nu_rate == 0.0 {
        return Err(Error::InvalidParameter {
            name: "nu_rate",
            reason: "sweep rate must be nonzero",
            value: nu_rate,
        });
    }
    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(swept_transmission(nu, nu_rate, omega_m, p[0], p[1])
            .iter()
            .zip(transmission)
            .map(|(m, d)| m - d)
            .collect())
    };
    let cost = |p: &[f64]| -> f64 {
        residuals(p).unwrap().iter().map(|r| r * r).sum()
    };
    let amp0 = amp_guess.abs().max(1e-6);
    let phase0 = (0..8)
        .map(|k| k as f64 * std::f64::consts::FRAC_PI_4)
        .min_by(|&a, &b| cost(&[amp0, a]).partial_cmp(&cost(&[amp0, b])).unwrap())
        .unwrap();
    let fit = crate::calibration::lm::levenberg_marquardt(residuals, &[amp0, phase0], 300)?;
    let n = transmission.len() as f64;
    Ok(SweepFit {
        amp_nu: fit.params[0].abs(),
        phase_rad: fit.params[1].rem_euclid(crate::constants::TWO_PI),
        residual_rms: (fit.cost / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI;
    use crate::params::{CavityParams, Damping, MechanicalMode};
    use approx::assert_relative_eq;

    #[test]
    fn coefficients_match_numerical_derivatives() {
        let t = |nu: f64| 1.0 / (1.0 + nu * nu);
        let h = 1e-3;
        for nu in [-1.7, -0.9, -0.3, 0.0, 0.2, MAGIC_DETUNING, 1.0, 1.8] {
            let (c1, c2, c3) = expansion_coefficients(nu);
            let t0 = t(nu);
            let d1 = (t(nu + h) - t(nu - h)) / (2.0 * h);
            let d2 = (t(nu + h) - 2.0 * t0 + t(nu - h)) / (h * h);
            let d3 = (t(nu + 2.0 * h) - 2.0 * t(nu + h) + 2.0 * t(nu - h)
                - t(nu - 2.0 * h))
                / (2.0 * h * h * h);
            assert_relative_eq!(c1, d1 / t0, epsilon = 1e-5);
            assert_relative_eq!(c2, d2 / (2.0 * t0), epsilon = 1e-5);
            assert_relative_eq!(c3, d3 / (6.0 * t0), epsilon = 1e-4);
        }
    }

    #[test]
    fn quadratic_coefficient_vanishes_at_magic_detuning() {
        let (_, c2, c3) = expansion_coefficients(MAGIC_DETUNING);
        assert!(c2.abs() < 1e-15, "c2 = {c2}");
        // The cubic residual survives.
        assert_relative_eq!(c3, 0.649519052838329, max_relative = 1e-12);

        let (_, c2_unit, _) = expansion_coefficients(1.0);
        assert_relative_eq!(c2_unit, 0.5, max_relative = 1e-12);

        let (_, c2_res, _) = expansion_coefficients(0.0);
        assert_relative_eq!(c2_res, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn shot_rin_reference_level() {
        let kappa = TWO_PI * 0.65e9;
        let grid = FrequencyGrid::new(0.0, 1e3, 1024).unwrap();
        let s = shot_rin_psd(4e5, kappa, 0.0, grid).unwrap();
        assert_relative_eq!(s.value_at(0.0).unwrap(), 4.897075172e-15, max_relative = 1e-9);
        // Flat well below the cavity linewidth.
        assert_relative_eq!(
            s.value_at(1e6).unwrap(),
            s.value_at(0.0).unwrap(),
            max_relative = 1e-3
        );
    }

    #[test]
    fn shot_rin_detuning_rolloff_at_dc() {
        let kappa = TWO_PI * 1e6;
        let grid = FrequencyGrid::new(0.0, 1.0, 16).unwrap();
        let on = shot_rin_psd(1e6, kappa, 0.0, grid).unwrap();
        let off = shot_rin_psd(1e6, kappa, 1.0, grid).unwrap();
        assert_relative_eq!(
            off.value_at(0.0).unwrap(),
            on.value_at(0.0).unwrap() / 2.0,
            max_relative = 1e-9
        );
    }

    fn small_system(nu: f64) -> SystemParams {
        let omega_m = TWO_PI * 500.0;
        SystemParams {
            modes: vec![MechanicalMode {
                mass_kg: 1e-9,
                omega_m,
                gamma_m: omega_m / 200.0,
                coupling_g: 2e14,
                temperature_k: 298.0,
                damping: Damping::Viscous,
            }],
            cavity: CavityParams {
                kappa: TWO_PI * 1e6,
                detuning_nu: nu,
                n_cav: 1e6,
                omega_laser: crate::params::omega_laser_from_wavelength(786e-9),
                eta: 0.4,
            },
            probe_index: 0,
        }
    }

    #[test]
    fn intermodulation_noise_dies_at_magic_detuning() {
        let grid = FrequencyGrid::new(0.0, 0.5, 8192).unwrap();
        let resonant = small_system(0.0);
        let magic = small_system(MAGIC_DETUNING);
        let s_nu = crate::spectra::detuning_noise_psd(&resonant, grid).unwrap();

        let tin_res = tin_rin_psd(&s_nu, 0.0, 1.0).unwrap();
        let tin_magic = tin_rin_psd(&s_nu, magic.cavity.detuning_nu, 1.0).unwrap();
        let peak_res = tin_res.band_peak(900.0, 1100.0).unwrap().1;
        let peak_magic = tin_magic.band_peak(900.0, 1100.0).unwrap().1;
        assert!(
            peak_magic < 1e-25 * peak_res,
            "magic-detuning residual {peak_magic:.3e} vs resonant {peak_res:.3e}"
        );
    }

    #[test]
    fn linear_term_vanishes_on_resonance_and_budget_stacks() {
        let grid = FrequencyGrid::new(0.0, 0.5, 8192).unwrap();
        let sys = small_system(0.0);
        let budget = intensity_noise_budget(&sys, grid, 1.0).unwrap();
        let linear = budget.get("linear").unwrap();
        assert!(linear.total_power() == 0.0);

        // Strong transduction: the 2ω harmonic band is TIN-dominated.
        let (name, frac) = budget.dominant(950.0, 1050.0).unwrap();
        assert_eq!(name, "tin");
        assert!(frac > 0.99);

        // Off resonance the linear term carries the mode peak instead.
        let sys = small_system(0.3);
        let budget = intensity_noise_budget(&sys, grid, 1.0).unwrap();
        let (name, _) = budget.dominant(480.0, 520.0).unwrap();
        assert_eq!(name, "linear");
    }

    #[test]
    fn sweep_reduces_to_static_lorentzian_without_oscillation() {
        let nu: Vec<f64> = (-200..=200).map(|k| k as f64 * 0.02).collect();
        let trace = swept_transmission(&nu, 50.0, TWO_PI * 40e3, 0.0, 0.0);
        for (v, p) in nu.iter().zip(&trace) {
            assert_relative_eq!(*p, 1.0 / (1.0 + v * v), max_relative = 1e-12);
        }
    }

    #[test]
    fn sweep_oscillation_period_in_detuning_is_rate_over_frequency() {
        let rate = 100.0;
        let omega_m = TWO_PI * 5e3;
        let amp = 0.3;
        let nu: Vec<f64> = (0..20000).map(|k| -2.0 + k as f64 * 2e-4).collect();
        let trace = swept_transmission(&nu, rate, omega_m, amp, 0.0);
        // The wiggle term repeats every Δν = 2π·rate/ω_m.
        let period = TWO_PI * rate / omega_m;
        let steps = (period / 2e-4).round() as usize;
        for k in 0..1000 {
            assert_relative_eq!(
                trace[k] / (1.0 / (1.0 + nu[k] * nu[k])),
                trace[k + steps] / (1.0 / (1.0 + nu[k + steps] * nu[k + steps])),
                max_relative = 0.02
            );
        }
    }

    #[test]
    fn sweep_fit_round_trips_the_modulation_depth() {
        // Membrane-scale trace: the fitted depth halves to Gx_th/κ ≈ 0.04.
        let coupling_g = 2.2820257e18;
        let x_th = 7.187791e-11;
        let kappa = TWO_PI * 0.65e9;
        let amp_true = 2.0 * coupling_g * x_th / kappa;
        let omega_m = TWO_PI * 41e3;
        let rate = 3000.0;
        let phase_true = 1.1;
        let nu: Vec<f64> = (0..6000).map(|k| -3.0 + k as f64 * 1e-3).collect();
        let trace = swept_transmission(&nu, rate, omega_m, amp_true, phase_true);

        // Initial guess deliberately 4× too large.
        let fit = fit_swept_transmission(&nu, &trace, rate, omega_m, 4.0 * amp_true).unwrap();
        assert_relative_eq!(fit.amp_nu, amp_true, max_relative = 1e-6);
        assert_relative_eq!(fit.phase_rad, phase_true, epsilon = 1e-5);
        assert!(fit.residual_rms < 1e-9);
        assert_relative_eq!(fit.amp_nu / 2.0, 0.0402, max_relative = 0.01);
    }

    #[test]
    fn sweep_fit_depth_is_linear_in_coupling() {
        let omega_m = TWO_PI * 41e3;
        let rate = 3000.0;
        let nu: Vec<f64> = (0..6000).map(|k| -3.0 + k as f64 * 1e-3).collect();
        let base = 0.04;
        let single = swept_transmission(&nu, rate, omega_m, base, 0.3);
        let double = swept_transmission(&nu, rate, omega_m, 2.0 * base, 0.3);
        let fit1 = fit_swept_transmission(&nu, &single, rate, omega_m, 0.1).unwrap();
        let fit2 = fit_swept_transmission(&nu, &double, rate, omega_m, 0.1).unwrap();
        assert_relative_eq!(fit2.amp_nu / fit1.amp_nu, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn sweep_fit_handles_a_quiet_trace() {
        let omega_m = TWO_PI * 41e3;
        let rate = 3000.0;
        let nu: Vec<f64> = (0..2000).map(|k| -2.0 + k as f64 * 2e-3).collect();
        let quiet = swept_transmission(&nu, rate, omega_m, 0.0, 0.0);
        let fit = fit_swept_transmission(&nu, &quiet, rate, omega_m, 0.01).unwrap();
        assert!(fit.amp_nu < 1e-4);
        assert!(fit.residual_rms < 1e-8);

        assert!(fit_swept_transmission(&nu[..4], &quiet[..4], rate, omega_m, 0.01).is_err());
        assert!(fit_swept_transmission(&nu, &quiet, 0.0, omega_m, 0.01).is_err());
    }
}
