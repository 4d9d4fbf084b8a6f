//! Calibration of system parameters from measured or synthesized spectra.
//!
//! The vacuum coupling g₀ comes from a phase-modulation tone of known depth
//! β at ω_mod: the tone carries a detuning-referred spectral power
//! (βω_mod)²/2 while the thermal peak of a mode at temperature T_eff
//! carries 2g₀²·k_B T_eff/(ħω_m), so the area ratio fixes
//!
//! ```text
//!  g₀ = (β ω_mod / 2) · √(ħ ω_m A_th / (k_B T_eff A_tone)).
//! ```
//!
//! Intracavity photon number comes from the detuning dependence of the
//! optical spring, Δω(ν) = 4νg₀²n_c(0)/(κ(1+ν²)²), fitted with n_c(0) as
//! the single free parameter.  Multimode thermal spectra are decomposed
//! with masked nonlinear least squares per peak, yielding (ω_m, Γ_m, m_eff)
//! under either dissipation model.  Budget assembly stacks the modeled
//! noise components of both detection channels for dominance analysis.

pub mod ingest;
pub mod lm;

pub use ingest::read_psd_csv_flexible;

use std::path::Path;

use crate::constants::{HBAR, K_B, TWO_PI};
use crate::params::{CavityParams, Damping, MechanicalMode, SystemParams};
use crate::spectra::{
    thermal_displacement_psd, FrequencyGrid, NoiseBudget, Psd, PsdUnits,
};
use crate::{Error, Result};

/// Phase-modulation reference tone.
#[derive(Debug, Clone)]
pub struct CalibrationTone {
    /// Modulation depth [rad]
    pub beta: f64,
    /// Modulation frequency [rad/s]
    pub omega_mod: f64,
}

impl CalibrationTone {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: "must be finite and positive",
                value: self.beta,
            });
        }
        if !(self.omega_mod > 0.0) || !self.omega_mod.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega_mod",
                reason: "must be finite and positive",
                value: self.omega_mod,
            });
        }
        Ok(())
    }
}

/// Vacuum coupling rate [rad/s] from the thermal-peak/tone area ratio.
///
/// Both areas are integrated from the same spectrum, so any overall gain or
/// unit convention cancels; only the frequency axis must be correct.
pub fn g0_from_tone(
    spectrum: &Psd,
    tone: &CalibrationTone,
    t_eff_k: f64,
    mode: &MechanicalMode,
) -> Result<f64> {
    tone.validate()?;
    if !(t_eff_k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_eff_k",
            reason: "must be positive",
            value: t_eff_k,
        });
    }
    let df = spectrum.grid.df;
    let f_m = mode.frequency_hz();
    let f_tone = tone.omega_mod / TWO_PI;

    let thermal = peak_area(spectrum, f_m, None)?;
    let tone_area = peak_area(spectrum, f_tone, Some(5.0 * df))?;
    if thermal.half_width + tone_area.half_width >= (f_m - f_tone).abs() {
        return Err(Error::UnresolvedPeak(format!(
            "tone at {f_tone} Hz overlaps the thermal peak window around {f_m} Hz"
        )));
    }

    let n_th_eff = K_B * t_eff_k / (HBAR * mode.omega_m);
    Ok(0.5 * tone.beta * tone.omega_mod * (thermal.area / (tone_area.area * n_th_eff)).sqrt())
}

struct PeakArea {
    area: f64,
    half_width: f64,
}

/// Floor-subtracted integrated power of a peak near `f0`.
///
/// The window half-width adapts to the measured FWHM (resolution-broadened
/// peaks get proportionally wider windows) unless fixed by the caller; the
/// local floor is the median of the flanking bands at 1–2 window widths.
fn peak_area(spectrum: &Psd, f0: f64, fixed_half_width: Option<f64>) -> Result<PeakArea> {
    let df = spectrum.grid.df;
    let half_width = match fixed_half_width {
        Some(w) => w,
        None => {
            let probe = 50.0 * df;
            let range = spectrum.grid.band(f0 - probe, f0 + probe)?;
            let window: Vec<f64> = spectrum.values[range.clone()].to_vec();
            let floor = percentile(&window, 0.2);
            let (f_pk, v_pk) = spectrum.band_peak(f0 - probe, f0 + probe)?;
            let k_pk = spectrum.grid.index_of(f_pk)?;
            let half = floor + 0.5 * (v_pk - floor);
            let mut left = k_pk;
            while left > *range.start() && spectrum.values[left - 1] > half {
                left -= 1;
            }
            let mut right = k_pk;
            while right < *range.end() && spectrum.values[right + 1] > half {
                right += 1;
            }
            let fwhm = ((right - left) as f64).max(1.0) * df;
            (25.0 * fwhm).max(10.0 * df)
        }
    };

    let range = spectrum.grid.band(f0 - half_width, f0 + half_width)?;
    let lo = spectrum.grid.f(*range.start());
    let hi = spectrum.grid.f(*range.end());

    let mut flank = Vec::new();
    for (a, b) in [
        (f0 - 2.0 * half_width, f0 - half_width),
        (f0 + half_width, f0 + 2.0 * half_width),
    ] {
        if let Ok(r) = spectrum.grid.band(a, b) {
            flank.extend_from_slice(&spectrum.values[r]);
        }
    }
    if flank.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no flanking bins around {f0} Hz to estimate the local floor"
        )));
    }
    let floor = percentile(&flank, 0.5);

    let (_, v_pk) = spectrum.band_peak(lo, hi)?;
    if floor > 0.0 && v_pk < 5.0 * floor {
        return Err(Error::UnresolvedPeak(format!(
            "peak near {f0} Hz rises less than 5× above the local floor"
        )));
    }

    let area = spectrum.band_power(lo, hi)? - floor * (hi - lo);
    if area <= 0.0 {
        return Err(Error::NegativeArea(format!(
            "peak near {f0} Hz has non-positive floor-subtracted area"
        )));
    }
    Ok(PeakArea { area, half_width })
}

fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Result of the optical-spring detuning fit.
#[derive(Debug, Clone)]
pub struct SpringFit {
    /// Intracavity photon number referred to resonance.
    pub n_c_resonant: f64,
    /// RMS misfit of the frequency shifts [rad/s].
    pub residual_rms: f64,
}

/// Photon number at resonance from optical-spring shifts measured at
/// several detunings, `shifts` = (ν, Δω [rad/s]).  The shift is linear in
/// n_c, so the fit is closed-form least squares on the fixed shape
/// 4νg₀²/(κ(1+ν²)²).
pub fn nc_from_spring_fit(
    shifts: &[(f64, f64)],
    mode: &MechanicalMode,
    cavity: &CavityParams,
) -> Result<SpringFit> {
    if shifts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 detuning points, got {}",
            shifts.len()
        )));
    }
    let g0 = mode.vacuum_coupling_rate();
    let shape = |nu: f64| {
        let l = 1.0 + nu * nu;
        4.0 * nu * g0 * g0 / (cavity.kappa * l * l)
    };
    let denom: f64 = shifts.iter().map(|&(nu, _)| shape(nu) * shape(nu)).sum();
    if denom == 0.0 {
        return Err(Error::FitFailed(
            "all points sit at zero detuning; the spring shape vanishes".into(),
        ));
    }
    let numer: f64 = shifts.iter().map(|&(nu, dw)| shape(nu) * dw).sum();
    let n_c = numer / denom;
    let residual_rms = (shifts
        .iter()
        .map(|&(nu, dw)| {
            let r = dw - n_c * shape(nu);
            r * r
        })
        .sum::<f64>()
        / shifts.len() as f64)
        .sqrt();
    Ok(SpringFit {
        n_c_resonant: n_c,
        residual_rms,
    })
}

/// Detection efficiency from the fitted photons-per-watt slope at resonance
/// (n_c = 4ηP/(ħω_Lκ) ⇒ η = slope·ħω_Lκ/4).
pub fn eta_from_slope(photons_per_watt: f64, cavity: &CavityParams) -> f64 {
    photons_per_watt * HBAR * cavity.omega_laser * cavity.kappa / 4.0
}

/// Search window and dissipation model for one thermal peak.
#[derive(Debug, Clone)]
pub struct PeakGuess {
    pub center_hz: f64,
    pub half_width_hz: f64,
    pub model: Damping,
}

/// Fitted thermal peak.
#[derive(Debug, Clone)]
pub struct PeakFit {
    /// Resonance frequency [rad/s]
    pub center: f64,
    /// Energy decay rate [rad/s]
    pub linewidth: f64,
    /// Integrated resonant power [spectrum units × Hz]
    pub area: f64,
    /// Effective mass from the fluctuation–dissipation amplitude [kg]
    pub mass_eff_kg: f64,
    pub model: Damping,
    pub masked_bins: usize,
}

/// Decompose a displacement spectrum into thermal peaks.
///
/// Each peak is fitted on its window with log-space residuals to the
/// fluctuation–dissipation shape of its dissipation model plus a local
/// floor; `mask_bins` bins on each side of the measured maximum are
/// excluded (resolution-limited analyzers corrupt the very top of a peak
/// narrower than a bin).
pub fn fit_thermal_peaks(
    spectrum: &Psd,
    guesses: &[PeakGuess],
    temperature_k: f64,
    mask_bins: usize,
) -> Result<Vec<PeakFit>> {
    if spectrum.units != PsdUnits::DisplacementSq {
        return Err(Error::GridMismatch(format!(
            "thermal peak fitting needs {} input, got {}",
            PsdUnits::DisplacementSq.label(),
            spectrum.units.label()
        )));
    }
    if !(temperature_k > 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature_k",
            reason: "must be positive",
            value: temperature_k,
        });
    }
    for (i, a) in guesses.iter().enumerate() {
        for b in &guesses[i + 1..] {
            if (a.center_hz - b.center_hz).abs() < a.half_width_hz + b.half_width_hz {
                return Err(Error::UnresolvedPeak(format!(
                    "windows of the peaks at {} Hz and {} Hz overlap",
                    a.center_hz, b.center_hz
                )));
            }
        }
    }
    guesses
        .iter()
        .map(|g| fit_one_peak(spectrum, g, temperature_k, mask_bins))
        .collect()
}

fn fit_one_peak(
    spectrum: &Psd,
    guess: &PeakGuess,
    temperature_k: f64,
    mask_bins: usize,
) -> Result<PeakFit> {
    let range = spectrum
        .grid
        .band(guess.center_hz - guess.half_width_hz, guess.center_hz + guess.half_width_hz)?;
    let bins: Vec<(f64, f64)> = range
        .clone()
        .map(|k| (spectrum.grid.f(k), spectrum.values[k]))
        .filter(|&(f, s)| f > 0.0 && s > 0.0)
        .collect();

    let (k_pk, _) = bins
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .ok_or_else(|| Error::InsufficientData("empty fit window".into()))?;
    let data: Vec<(f64, f64)> = bins
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(k_pk) > mask_bins || mask_bins == 0)
        .map(|(_, &p)| p)
        .collect();
    if data.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "only {} usable bins around {} Hz",
            data.len(),
            guess.center_hz
        )));
    }

    // Starting point from the usable (unmasked) bins only, so corrupted
    // resonance bins cannot skew the initial scales.
    let window: Vec<f64> = data.iter().map(|&(_, s)| s).collect();
    let floor0 = percentile(&window, 0.2);
    let &(f_pk, s_pk) = data
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("data is non-empty");
    let height = (s_pk - floor0).max(s_pk * 1e-3);
    let half = floor0 + 0.5 * height;
    let above = data.iter().filter(|&&(_, s)| s > half).count();
    let fwhm_hz = (above as f64).max(1.0) * spectrum.grid.df;

    // Well-scaled parameterization: p = [ω0/ω_ref, ln(γ/γ0), ln(a/a0), √(B/B0)].
    let omega_ref = TWO_PI * f_pk;
    let gamma0 = TWO_PI * fwhm_hz;
    let a0 = height * gamma0 * gamma0 * omega_ref * omega_ref;
    let b0 = floor0.max(s_pk * 1e-9);
    let model = guess.model;
    let shape = move |f: f64, omega0: f64, gamma: f64, a: f64, b: f64| -> f64 {
        let w = TWO_PI * f;
        let det = omega0 * omega0 - w * w;
        match model {
            Damping::Viscous => b + a / (det * det + gamma * gamma * w * w),
            Damping::Structural => {
                b + a * (omega0 / w) / (det * det + gamma * gamma * omega0 * omega0)
            }
        }
    };
    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        let omega0 = p[0] * omega_ref;
        let gamma = p[1].clamp(-25.0, 25.0).exp() * gamma0;
        let a = p[2].clamp(-40.0, 40.0).exp() * a0;
        let b = p[3] * p[3] * b0;
        Ok(data
            .iter()
            .map(|&(f, s)| (shape(f, omega0, gamma, a, b).max(1e-300) / s).ln())
            .collect())
    };
    let fit = lm::levenberg_marquardt(residuals, &[1.0, 0.0, 0.0, 1.0], 300)?;
    if !fit.converged {
        return Err(Error::FitFailed(format!(
            "peak fit near {} Hz did not converge",
            guess.center_hz
        )));
    }
    let center = fit.params[0] * omega_ref;
    let linewidth = fit.params[1].exp() * gamma0;
    let amplitude = fit.params[2].exp() * a0;
    let f_center = center / TWO_PI;
    if !(f_center > guess.center_hz - guess.half_width_hz
        && f_center < guess.center_hz + guess.half_width_hz)
        || !linewidth.is_finite()
    {
        return Err(Error::FitFailed(format!(
            "peak fit near {} Hz left its window",
            guess.center_hz
        )));
    }

    // Resonant-term integral ∫S df = a/(4γω0²); for structural damping this
    // is the same to O(Γ/ω0), with the sub-resonance 1/f tail excluded.
    Ok(PeakFit {
        center,
        linewidth,
        area: amplitude / (4.0 * linewidth * center * center),
        mass_eff_kg: 4.0 * K_B * temperature_k * linewidth / amplitude,
        model: guess.model,
        masked_bins: mask_bins,
    })
}

/// Extra budget lines beyond the modeled optomechanics, plus assembly flags.
#[derive(Debug, Clone)]
pub struct BudgetExtras {
    /// Flat detector floor on the displacement channel [m²/Hz].
    pub imprecision_m2_per_hz: f64,
    /// Flat laser frequency noise in detuning units [ν²/Hz], referred to
    /// displacement through (2G_p/κ)².
    pub laser_detuning_noise_nu2_per_hz: f64,
    /// Flat classical intensity noise [1/Hz].
    pub classical_rin_per_hz: f64,
    /// Include the vacuum radiation-pressure line (switching it off gives
    /// the thermal-dominated approximation of the displacement budget).
    pub include_quantum_backaction: bool,
    /// Empirical scale on the intermodulation kernel.
    pub correction: f64,
}

impl Default for BudgetExtras {
    fn default() -> Self {
        Self {
            imprecision_m2_per_hz: 0.0,
            laser_detuning_noise_nu2_per_hz: 0.0,
            classical_rin_per_hz: 0.0,
            include_quantum_backaction: true,
            correction: 1.0,
        }
    }
}

/// Assemble the displacement-channel and intensity-channel noise budgets.
///
/// Displacement components (probe-referred, m²/Hz): `imprecision`,
/// `laser_frequency`, `thermal` (all modes through their transduction
/// weights), `tin_backaction`, `quantum_backaction`, `linear_backaction`
/// (detuned operation only).  Intensity components (1/Hz): `shot`,
/// `linear`, `tin`, `classical`.  Totals are exact bin-wise sums.
pub fn assemble_budgets(
    system: &SystemParams,
    grid: FrequencyGrid,
    extras: &BudgetExtras,
) -> Result<(NoiseBudget, NoiseBudget)> {
    system.validate()?;
    let probe = system.probe();
    let pull = 2.0 * probe.coupling_g / system.cavity.kappa;

    let mut displacement = NoiseBudget::new();
    if extras.imprecision_m2_per_hz > 0.0 {
        displacement.push(
            "imprecision",
            Psd::from_fn(grid, PsdUnits::DisplacementSq, |_| {
                extras.imprecision_m2_per_hz
            })?,
        )?;
    }
    if extras.laser_detuning_noise_nu2_per_hz > 0.0 {
        let level = extras.laser_detuning_noise_nu2_per_hz / (pull * pull);
        displacement.push(
            "laser_frequency",
            Psd::from_fn(grid, PsdUnits::DisplacementSq, |_| level)?,
        )?;
    }
    let mut thermal = vec![0.0; grid.n];
    for mode in &system.modes {
        let weight = mode.coupling_g / probe.coupling_g;
        let s = thermal_displacement_psd(mode, grid)?;
        for (acc, v) in thermal.iter_mut().zip(&s.values) {
            *acc += weight * weight * v;
        }
    }
    displacement.push(
        "thermal",
        Psd::new(grid, thermal, PsdUnits::DisplacementSq)?,
    )?;
    let probe_budget = crate::backaction::displacement_noise_budget(
        system,
        system.probe_index,
        grid,
        extras.correction,
    )?;
    for (name, psd) in probe_budget.components() {
        match name {
            "thermal" => {}
            "quantum_backaction" if !extras.include_quantum_backaction => {}
            _ => displacement.push(name, psd.clone())?,
        }
    }

    let mut intensity =
        crate::transduction::intensity_noise_budget(system, grid, extras.correction)?;
    if extras.classical_rin_per_hz > 0.0 {
        intensity.push(
            "classical",
            Psd::from_fn(grid, PsdUnits::Rin, |_| extras.classical_rin_per_hz)?,
        )?;
    }
    Ok((displacement, intensity))
}

/// Largest component of a budget in each band: (band, name, fraction of
/// total power).
pub fn dominance_report(
    budget: &NoiseBudget,
    bands: &[(f64, f64)],
) -> Result<Vec<((f64, f64), String, f64)>> {
    bands
        .iter()
        .map(|&(lo, hi)| {
            let (name, fraction) = budget.dominant(lo, hi)?;
            Ok(((lo, hi), name.to_string(), fraction))
        })
        .collect()
}

/// Fit band-integrated intensity noise versus input power to A/P + B,
/// splitting the power-inverse (shot) and power-independent
/// (intermodulation) parts.  Returns (A [W/Hz·Hz ≡ W-weighted], B).
pub fn fit_power_split(powers_w: &[f64], band_rin: &[f64]) -> Result<(f64, f64)> {
    if powers_w.len() != band_rin.len() {
        return Err(Error::GridMismatch(format!(
            "{} powers vs {} band levels",
            powers_w.len(),
            band_rin.len()
        )));
    }
    if powers_w.len() < 2 {
        return Err(Error::InsufficientData(
            "need at least two powers to split shot from intermodulation".into(),
        ));
    }
    if powers_w.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "powers_w",
            reason: "all powers must be positive",
            value: *powers_w.iter().find(|&&p| !(p > 0.0)).unwrap(),
        });
    }
    let n = powers_w.len() as f64;
    let x: Vec<f64> = powers_w.iter().map(|&p| 1.0 / p).collect();
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sy: f64 = band_rin.iter().sum();
    let sxy: f64 = x.iter().zip(band_rin).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx {
        return Err(Error::FitFailed(
            "powers are degenerate; cannot separate the 1/P part".into(),
        ));
    }
    let a = (n * sxy - sx * sy) / det;
    let b = (sy * sxx - sx * sxy) / det;
    Ok((a, b))
}

/// Structured key/value calibration report.
#[derive(Debug, Clone, Default)]
pub struct CalibrationReport {
    entries: Vec<(String, String)>,
}

impl CalibrationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl std::fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn push_quantity(&mut self, key: impl Into<String>, value: f64, unit: &str) {
        self.entries
            .push((key.into(), format!("{value:.6e} {unit}")));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl std::fmt::Display for CalibrationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (key, value) in &self.entries {
            writeln!(f, "{key}: {value}")?;
        }
        Ok(())
    }
}
