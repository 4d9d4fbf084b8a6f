//! Radiation-pressure backaction of the transduced noise, and the quantum
//! cooperativity it limits.
//!
//! The intracavity photon number follows the same expansion as the
//! transmitted intensity, so every mode feels a force F = ħG n̄ (c₁δν +
//! c₂δν² + …) plus the filtered vacuum drive.  The quadratic term is the
//! intermodulation backaction: a broadband force ∝ n̄² that heats the
//! mechanics twice as fast (per decade of power) as quantum backaction.
//! Balancing it against thermal decoherence gives the quantum cooperativity
//!
//! ```text
//!  C_q = (1+ν²)⁻¹ [ S_TIN n_c κ/8 + n_th/(C₀ n_c) ]⁻¹
//! ```
//!
//! maximized at n_c* = √(8 n_th / (κ C₀ S_TIN)) with the detuning-family
//! bound C_q ≤ √(2 S_ν^zp / (n_th S_TIN)) / (1+ν²).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::params::{CavityParams, MechanicalMode, SystemParams};
use crate::spectra::{
    detuning_noise_psd, mechanical_susceptibility, FrequencyGrid, NoiseBudget, Psd, PsdUnits,
};
use crate::transduction::{expansion_coefficients, shot_rin_psd, tin_rin_psd};
use crate::constants::HBAR;
use crate::Result;

/// Dynamical backaction on one mode: optical spring and optical damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalSpring {
    /// Frequency shift δΩ_m [rad/s]
    pub frequency_shift: f64,
    /// Added damping Γ_opt [rad/s] (positive = cooling)
    pub damping_shift: f64,
}

/// Exact two-sideband dynamical backaction at the cavity's set detuning,
/// valid at any sideband resolution:
///
/// ```text
///  Γ_opt = g² κ [D(ω_m) − D(−ω_m)],   δΩ = g² [(Δ+ω_m)D(ω_m) + (Δ−ω_m)D(−ω_m)]
/// ```
///
/// with D(ω) = 1/((κ/2)² + (Δ+ω)²) and g² = g₀² n_cav.  Both are odd in the
/// detuning and reduce to δΩ = 4 g² ν / (κ (1+ν²)) in the fast-cavity limit.
pub fn dynamical_backaction(mode: &MechanicalMode, cavity: &CavityParams) -> OpticalSpring {
    let g0 = mode.vacuum_coupling_rate();
    let g_sq = g0 * g0 * cavity.n_cav;
    let kappa = cavity.kappa;
    let delta = cavity.detuning_rad();
    let d = |omega: f64| {
        let s = delta + omega;
        1.0 / (kappa * kappa / 4.0 + s * s)
    };
    let dp = d(mode.omega_m);
    let dm = d(-mode.omega_m);
    OpticalSpring {
        frequency_shift: g_sq * ((delta + mode.omega_m) * dp + (delta - mode.omega_m) * dm),
        damping_shift: g_sq * kappa * (dp - dm),
    }
}

/// Quantum-backaction force spectrum on mode `target` [N²/Hz]: the filtered
/// vacuum drive (ħ G n̄)² · S_shot(f), equal to 8ħ²G²n̄/κ on resonance in the
/// fast-cavity limit.
pub fn quantum_backaction_force_psd(
    system: &SystemParams,
    target: usize,
    grid: FrequencyGrid,
) -> Result<Psd> {
    let c = &system.cavity;
    let shot = shot_rin_psd(c.n_cav, c.kappa, c.detuning_nu, grid)?;
    let scale = HBAR * system.modes[target].coupling_g * c.n_cav;
    Psd::new(
        grid,
        shot.values.iter().map(|v| scale * scale * v).collect(),
        PsdUnits::ForceSq,
    )
}

/// Intermodulation-backaction force spectrum on mode `target` [N²/Hz]:
/// (ħ G n̄ c₂)² · S_{ν²}(f), with the detuning noise summed over all modes.
pub fn tin_backaction_force_psd(
    system: &SystemParams,
    target: usize,
    grid: FrequencyGrid,
    correction: f64,
) -> Result<Psd> {
    let c = &system.cavity;
    let s_nu = detuning_noise_psd(system, grid)?;
    let tin_rin = tin_rin_psd(&s_nu, c.detuning_nu, correction)?;
    let scale = HBAR * system.modes[target].coupling_g * c.n_cav;
    Psd::new(
        grid,
        tin_rin.values.iter().map(|v| scale * scale * v).collect(),
        PsdUnits::ForceSq,
    )
}

/// Linearly transduced backaction force on `target` [N²/Hz]: (ħ G n̄ c₁)² S_ν.
/// Vanishes on resonance; off resonance it is the incoherent image of the
/// other modes' motion (the coherent self-response is the optical spring,
/// reported separately).
pub fn linear_backaction_force_psd(
    system: &SystemParams,
    target: usize,
    grid: FrequencyGrid,
) -> Result<Psd> {
    let c = &system.cavity;
    let s_nu = detuning_noise_psd(system, grid)?;
    let (c1, _, _) = expansion_coefficients(c.detuning_nu);
    let scale = HBAR * system.modes[target].coupling_g * c.n_cav * c1;
    Psd::new(
        grid,
        s_nu.values.iter().map(|v| scale * scale * v).collect(),
        PsdUnits::ForceSq,
    )
}

/// Displacement-noise budget of mode `target` [m²/Hz]: each force source
/// filtered through the mode's susceptibility.
pub fn displacement_noise_budget(
    system: &SystemParams,
    target: usize,
    grid: FrequencyGrid,
    correction: f64,
) -> Result<NoiseBudget> {
    let mode = &system.modes[target];
    let chi_sq: Vec<f64> = (0..grid.n)
        .map(|k| mechanical_susceptibility(mode, grid.f(k)).norm_sqr())
        .collect();
    let through_mode = |f_psd: Psd| -> Result<Psd> {
        Psd::new(
            grid,
            f_psd
                .values
                .iter()
                .zip(&chi_sq)
                .map(|(s, x)| s * x)
                .collect(),
            PsdUnits::DisplacementSq,
        )
    };

    let thermal = Psd::from_fn(grid, PsdUnits::ForceSq, |f| mode.thermal_force_psd(f))?;
    let mut budget = NoiseBudget::new();
    budget.push("thermal", through_mode(thermal)?)?;
    budget.push(
        "tin_backaction",
        through_mode(tin_backaction_force_psd(system, target, grid, correction)?)?,
    )?;
    budget.push(
        "quantum_backaction",
        through_mode(quantum_backaction_force_psd(system, target, grid)?)?,
    )?;
    if system.cavity.detuning_nu != 0.0 {
        budget.push(
            "linear_backaction",
            through_mode(linear_backaction_force_psd(system, target, grid)?)?,
        )?;
    }
    Ok(budget)
}

/// Quantum cooperativity at photon number `n_cav` (held at detuning `nu`),
/// given the band-average intermodulation level `s_tin` [1/Hz] referred to
/// resonance, the vacuum cooperativity `c0`, thermal occupation `n_th`, and
/// linewidth `kappa` [rad/s].
pub fn quantum_cooperativity(
    s_tin: f64,
    n_cav: f64,
    nu: f64,
    c0: f64,
    n_th: f64,
    kappa: f64,
) -> f64 {
    let tin_term = s_tin * n_cav * kappa / 8.0;
    let thermal_term = n_th / (c0 * n_cav);
    1.0 / ((1.0 + nu * nu) * (tin_term + thermal_term))
}

/// Photon number that maximizes [`quantum_cooperativity`]:
/// n_c* = √(8 n_th / (κ C₀ S_TIN)).
pub fn optimal_photon_number(s_tin: f64, c0: f64, n_th: f64, kappa: f64) -> f64 {
    ((8.0 / kappa) * n_th / (c0 * s_tin)).sqrt()
}

/// The power-independent cooperativity ceiling
/// C_q ≤ √(2 S_ν^zp / (n_th S_TIN)) / (1+ν²).
pub fn cooperativity_bound(s_tin: f64, s_nu_zp: f64, n_th: f64, nu: f64) -> f64 {
    (2.0 * s_nu_zp / (n_th * s_tin)).sqrt() / (1.0 + nu * nu)
}

/// One sheet of the design landscape: a (κ, T) operating point scanned over
/// photon number.
#[derive(Debug, Clone, Serialize)]
pub struct LandscapeSheet {
    pub kappa: f64,
    pub temperature_k: f64,
    /// Band intermodulation level at this κ and T [1/Hz].
    pub s_tin: f64,
    pub n_cav: Vec<f64>,
    pub cq: Vec<f64>,
    /// Input power for each photon number [W].
    pub power_w: Vec<f64>,
    /// Closed-form optimum photon number.
    pub optimal_n_cav: f64,
    /// Cooperativity ceiling at this sheet's κ and T.
    pub bound: f64,
    /// Dynamical-backaction instability flag per photon number
    /// (anti-damping exceeding the intrinsic linewidth).
    pub unstable: Vec<bool>,
}

/// Landscape configuration: κ scale factors and temperatures applied to a
/// reference system whose band TIN level `s_tin_ref` was computed (or
/// measured) at the reference κ and temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub kappa_scales: Vec<f64>,
    pub temperatures_k: Vec<f64>,
    /// Photon-number grid (log-spaced): lowest value, highest value, points.
    pub n_cav_lo: f64,
    pub n_cav_hi: f64,
    pub n_cav_points: usize,
    /// Band TIN level of the reference system at its own κ and T [1/Hz].
    pub s_tin_ref: f64,
}

/// Scan C_q over (κ, T, n_c).  At fixed pull G the detuning noise scales as
/// S_ν ∝ T/κ², so the band TIN level scales as S_TIN ∝ T²/κ⁴ from the
/// reference sheet; n_th ∝ T and C₀ ∝ 1/κ follow their definitions.
pub fn cq_landscape(system: &SystemParams, cfg: &LandscapeConfig) -> Result<Vec<LandscapeSheet>> {
    system.validate()?;
    if cfg.n_cav_points < 2 || !(cfg.n_cav_lo > 0.0) || !(cfg.n_cav_hi > cfg.n_cav_lo) {
        return Err(crate::Error::InvalidParameter {
            name: "n_cav_points",
            reason: "need an increasing photon grid with at least 2 points",
            value: cfg.n_cav_points as f64,
        });
    }
    let probe = system.probe();
    let t_ref = probe.temperature_k;
    let kappa_ref = system.cavity.kappa;
    let nu = system.cavity.detuning_nu;
    let points: Vec<(f64, f64)> = cfg
        .kappa_scales
        .iter()
        .flat_map(|ks| cfg.temperatures_k.iter().map(move |t| (*ks, *t)))
        .collect();

    let log_lo = cfg.n_cav_lo.ln();
    let log_step = (cfg.n_cav_hi / cfg.n_cav_lo).ln() / (cfg.n_cav_points - 1) as f64;

    Ok(points
        .par_iter()
        .map(|&(kappa_scale, temperature_k)| {
            let kappa = kappa_ref * kappa_scale;
            let t_scale = temperature_k / t_ref;
            let s_tin = cfg.s_tin_ref * t_scale * t_scale / kappa_scale.powi(4);
            let n_th = probe.thermal_occupation() * t_scale;
            let g0 = probe.vacuum_coupling_rate();
            let c0 = 4.0 * g0 * g0 / (kappa * probe.gamma_m);
            let s_nu_zp = c0 / kappa;

            let mut cavity = system.cavity.clone();
            cavity.kappa = kappa;

            let n_cav: Vec<f64> = (0..cfg.n_cav_points)
                .map(|i| (log_lo + i as f64 * log_step).exp())
                .collect();
            let cq: Vec<f64> = n_cav
                .iter()
                .map(|&n| quantum_cooperativity(s_tin, n, nu, c0, n_th, kappa))
                .collect();
            let power_w: Vec<f64> = n_cav
                .iter()
                .map(|&n| cavity.power_from_photon_number(n))
                .collect();
            let mut mode = probe.clone();
            mode.temperature_k = temperature_k;
            let unstable: Vec<bool> = n_cav
                .iter()
                .map(|&n| {
                    let mut c = cavity.clone();
                    c.n_cav = n;
                    let spring = dynamical_backaction(&mode, &c);
                    spring.damping_shift < -mode.gamma_m
                        || spring.frequency_shift.abs() > 0.5 * mode.omega_m
                })
                .collect();

            LandscapeSheet {
                kappa,
                temperature_k,
                s_tin,
                n_cav,
                cq,
                power_w,
                optimal_n_cav: optimal_photon_number(s_tin, c0, n_th, kappa),
                bound: cooperativity_bound(s_tin, s_nu_zp, n_th, nu),
                unstable,
            }
        })
        .collect())
}

/// Refine the grid argmax of a sheet to the exact stationary point of the
/// two-term model 1/C_q = a·n + b/n using the argmax bin and its best
/// neighbor: n* = √(b/a).
pub fn refine_optimum(sheet: &LandscapeSheet) -> Result<f64> {
    let k = sheet
        .cq
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .ok_or_else(|| crate::Error::InsufficientData("empty landscape sheet".into()))?;
    let j = if k == 0 {
        1
    } else if k == sheet.cq.len() - 1 {
        k - 1
    } else if sheet.cq[k - 1] > sheet.cq[k + 1] {
        k - 1
    } else {
        k + 1
    };
    let (n1, n2) = (sheet.n_cav[k], sheet.n_cav[j]);
    let (y1, y2) = (1.0 / sheet.cq[k], 1.0 / sheet.cq[j]);
    let det = n1 / n2 - n2 / n1;
    if det.abs() < 1e-300 {
        return Err(crate::Error::FitFailed(
            "degenerate photon grid around the optimum".into(),
        ));
    }
    let a = (y1 / n2 - y2 / n1) / det;
    let b = (y2 * n1 - y1 * n2) / det;
    if a <= 0.0 || b <= 0.0 {
        return Err(crate::Error::FitFailed(
            "landscape is not concave around the optimum".into(),
        ));
    }
    Ok((b / a).sqrt())
}
