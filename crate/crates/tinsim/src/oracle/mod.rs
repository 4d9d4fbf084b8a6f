//! Time-domain Langevin oracle.
//!
//! Integrates the coupled mode–cavity dynamics with no linearization of the
//! transduction: the instantaneous detuning is ν_tot = ν_set + Σ 2G_j x_j/κ
//! (x oriented so positive displacement increases detuning), the intracavity
//! photon number follows the full Lorentzian n_c = n₀/(1+ν_tot²), and every
//! mode feels F_j = ħG_j (n_c − n̄).  Thermal motion itself is advanced with
//! the *exact* exponential propagator of the damped oscillator and the exact
//! per-step noise covariance, so the only discretization error in the run is
//! the sampling of the slowly varying radiation force (O(h²), with h at
//! least 20× below any mechanical period).
//!
//! Detection channels: `intensity` is the relative intracavity photon number
//! with white shot noise at the set point's spectral density; `y` is the
//! probe-calibrated displacement Σ (G_j/G_p) x_j with a white imprecision
//! floor; `nu` is the instantaneous total detuning; `x{j}` are the bare mode
//! coordinates.  A slow EMA lock steers the mean detuning back to the set
//! point (static radiation-pressure offsets are nulled) without touching the
//! analysis band.  Optional blocks: first-order cavity field filter, vacuum
//! drive on the modes, and cold-damping feedback through a state-variable
//! bandpass with one sample of loop latency.
//!
//! Structural damping is simulated as viscous at the resonance linewidth;
//! intermodulation products sample the modes in their linewidth
//! neighborhoods, where the two models agree to O(Γ/ω).

pub mod measure;
pub mod record;
pub mod streams;

pub use record::{RecordHeader, SimRecord};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, K_B, TWO_PI};
use crate::params::SystemParams;
use crate::{Error, Result};
use streams::{stream, Role};

/// Cold-damping feedback: a state-variable bandpass at `center_hz` with
/// quality `q` produces a velocity estimate from the noisy displacement
/// channel; the force −gain·v̂ is applied to every mode with one sample of
/// latency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedbackConfig {
    pub center_hz: f64,
    pub q: f64,
    /// Viscous feedback gain [N·s/m]; positive damps.
    pub gain_n_s_per_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub system: SystemParams,
    /// Sample rate [Hz]; must resolve every mode 20× over.
    pub fs: f64,
    /// Recorded duration [s].
    pub duration_s: f64,
    /// Discarded lead-in [s] (the modes start in thermal equilibrium, so
    /// this only matters when backaction or feedback reshape the steady
    /// state).
    pub settle_s: f64,
    pub seed: u64,
    /// Time constant of the mean-detuning lock [s]; 0 disables it.
    pub lock_tau_s: f64,
    /// Integrate the first-order cavity field instead of the adiabatic
    /// Lorentzian (for convergence checks; the adiabatic limit is exact to
    /// O(ω_m/κ) everywhere in scope).
    pub cavity_filter: bool,
    /// Add the intracavity vacuum drive as a common white force.
    pub qba_force: bool,
    /// Let the radiation force act on the probe mode (switching it off
    /// gives the zero-backaction control while the transduction of all
    /// modes stays untouched).
    pub probe_force_enabled: bool,
    /// White detector floor on the `y` channel [m²/Hz].
    pub imprecision_m2_per_hz: f64,
    pub feedback: Option<FeedbackConfig>,
    /// Channels to record: `y`, `intensity`, `nu`, `x0`…`x{n-1}`.
    pub record: Vec<String>,
}

impl SimConfig {
    /// A config with the conventional defaults: lock at 2 s, adiabatic
    /// cavity, no vacuum drive, no feedback, no detector floor, record the
    /// two detection channels.
    pub fn new(system: SystemParams, fs: f64, duration_s: f64) -> Self {
        Self {
            system,
            fs,
            duration_s,
            settle_s: 0.0,
            seed: 0,
            lock_tau_s: 2.0,
            cavity_filter: false,
            qba_force: false,
            probe_force_enabled: true,
            imprecision_m2_per_hz: 0.0,
            feedback: None,
            record: vec!["y".into(), "intensity".into()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return Err(Error::InvalidParameter {
                name: "fs",
                reason: "must be finite and positive",
                value: self.fs,
            });
        }
        let f_max = self
            .system
            .modes
            .iter()
            .map(|m| m.frequency_hz())
            .fold(0.0f64, f64::max);
        if self.fs < 20.0 * f_max {
            return Err(Error::Aliasing(format!(
                "fs = {} Hz under-resolves the {f_max} Hz mode (need ≥ {})",
                self.fs,
                20.0 * f_max
            )));
        }
        if !(self.duration_s > 0.0) || self.n_samples() < 16 {
            return Err(Error::InvalidParameter {
                name: "duration_s",
                reason: "must cover at least 16 samples",
                value: self.duration_s,
            });
        }
        if self.settle_s < 0.0 {
            return Err(Error::InvalidParameter {
                name: "settle_s",
                reason: "must be non-negative",
                value: self.settle_s,
            });
        }
        let h = 1.0 / self.fs;
        if self.lock_tau_s != 0.0 && self.lock_tau_s < 2.0 * h {
            return Err(Error::InvalidParameter {
                name: "lock_tau_s",
                reason: "lock must be slower than two samples (or 0 to disable)",
                value: self.lock_tau_s,
            });
        }
        if !(self.imprecision_m2_per_hz >= 0.0) || !self.imprecision_m2_per_hz.is_finite() {
            return Err(Error::InvalidParameter {
                name: "imprecision_m2_per_hz",
                reason: "must be finite and non-negative",
                value: self.imprecision_m2_per_hz,
            });
        }
        if let Some(fb) = &self.feedback {
            if !(fb.center_hz > 0.0 && fb.center_hz <= self.fs / 6.0) {
                return Err(Error::InvalidParameter {
                    name: "feedback.center_hz",
                    reason: "must lie in (0, fs/6] for a stable discrete filter",
                    value: fb.center_hz,
                });
            }
            if !(fb.q >= 0.5) || !fb.q.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "feedback.q",
                    reason: "must be at least 1/2",
                    value: fb.q,
                });
            }
            if !fb.gain_n_s_per_m.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "feedback.gain_n_s_per_m",
                    reason: "must be finite",
                    value: fb.gain_n_s_per_m,
                });
            }
        }
        if self.record.is_empty() {
            return Err(Error::InvalidParameter {
                name: "record",
                reason: "at least one channel must be recorded",
                value: 0.0,
            });
        }
        for name in &self.record {
            let valid = matches!(name.as_str(), "y" | "intensity" | "nu")
                || name
                    .strip_prefix('x')
                    .and_then(|i| i.parse::<usize>().ok())
                    .is_some_and(|i| i < self.system.modes.len());
            if !valid {
                return Err(Error::Parse(format!("unknown record channel {name:?}")));
            }
            if name == "intensity" && !(self.system.cavity.n_cav > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "n_cav",
                    reason: "intensity channel needs photons in the cavity",
                    value: self.system.cavity.n_cav,
                });
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.fs).round() as usize
    }
}

/// Exact one-step propagator and noise factor of a damped thermal mode.
struct ModeStepper {
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
    l11: f64,
    l21: f64,
    l22: f64,
    x: f64,
    v: f64,
    inv_mass: f64,
    /// ħG, force per unit photon-number excursion [N]
    hbar_g: f64,
    /// 2G/κ, detuning per displacement [1/m]
    pull: f64,
    /// Abort threshold on |x| [m]
    limit: f64,
    rng: rand_chacha::ChaCha12Rng,
}

impl ModeStepper {
    fn new(
        mode: &crate::params::MechanicalMode,
        kappa: f64,
        h: f64,
        seed: u64,
        index: u32,
    ) -> Self {
        let omega = mode.omega_m;
        let gamma = mode.gamma_m;
        let omega_d = (omega * omega - 0.25 * gamma * gamma).sqrt();
        let e = (-0.5 * gamma * h).exp();
        let c = (omega_d * h).cos();
        let s = (omega_d * h).sin() / omega_d;

        let e2 = (-gamma * h).exp();
        let one_m_e2 = -(-gamma * h).exp_m1();
        let c2 = (2.0 * omega_d * h).cos();
        let s2 = (2.0 * omega_d * h).sin();
        let q = 2.0 * K_B * mode.temperature_k * gamma / mode.mass_kg;
        let osq8 = 8.0 * omega * omega;
        let bracket = gamma - e2 * (gamma * c2 - 2.0 * omega_d * s2);
        let int_i = one_m_e2 / (2.0 * gamma) - bracket / osq8;
        let int_j = one_m_e2 / (2.0 * gamma) + bracket / osq8;
        let int_k = (2.0 * omega_d - e2 * (gamma * s2 + 2.0 * omega_d * c2)) / osq8;
        let sig_xx = q * int_i / (omega_d * omega_d);
        let sig_xv = q * (int_k / omega_d - 0.5 * gamma * int_i / (omega_d * omega_d));
        let sig_vv = q
            * (int_j - gamma * int_k / omega_d
                + 0.25 * gamma * gamma * int_i / (omega_d * omega_d));

        let l11 = sig_xx.max(0.0).sqrt();
        let l21 = if l11 > 0.0 { sig_xv / l11 } else { 0.0 };
        let l22 = (sig_vv - l21 * l21).max(0.0).sqrt();

        let mut rng = stream(seed, Role::Thermal, index);
        let x_std = mode.rms_thermal_displacement();
        let v_std = (K_B * mode.temperature_k / mode.mass_kg).sqrt();
        let n1: f64 = StandardNormal.sample(&mut rng);
        let n2: f64 = StandardNormal.sample(&mut rng);

        Self {
            a11: e * (c + 0.5 * gamma * s),
            a12: e * s,
            a21: -e * omega * omega * s,
            a22: e * (c - 0.5 * gamma * s),
            l11,
            l21,
            l22,
            x: x_std * n1,
            v: v_std * n2,
            inv_mass: 1.0 / mode.mass_kg,
            hbar_g: HBAR * mode.coupling_g,
            pull: 2.0 * mode.coupling_g / kappa,
            limit: 1e6 * x_std.max(mode.zero_point_amplitude()),
            rng,
        }
    }

    /// Velocity kick from slowly varying external forces, then the exact
    /// thermal propagation over one step.
    fn advance(&mut self, force: f64, h: f64) {
        self.v += force * self.inv_mass * h;
        let n1: f64 = StandardNormal.sample(&mut self.rng);
        let n2: f64 = StandardNormal.sample(&mut self.rng);
        let x = self.a11 * self.x + self.a12 * self.v + self.l11 * n1;
        let v = self.a21 * self.x + self.a22 * self.v + self.l21 * n1 + self.l22 * n2;
        self.x = x;
        self.v = v;
    }
}

/// Run the simulation and return the recorded channels.
pub fn run(config: &SimConfig) -> Result<SimRecord> {
    config.validate()?;
    let sys = &config.system;
    let cavity = &sys.cavity;
    let h = 1.0 / config.fs;
    let n_samples = config.n_samples();
    let settle = (config.settle_s * config.fs).round() as usize;
    let total_steps = settle + n_samples;

    let mut modes: Vec<ModeStepper> = sys
        .modes
        .iter()
        .enumerate()
        .map(|(j, m)| ModeStepper::new(m, cavity.kappa, h, config.seed, j as u32))
        .collect();

    let nu_set = cavity.detuning_nu;
    let n_set = cavity.n_cav;
    let n_resonant = cavity.resonant_photon_number();
    let probe_g = sys.probe().coupling_g;

    let record_intensity = config.record.iter().any(|n| n == "intensity");
    let sigma_shot = if record_intensity {
        let s_shot = 8.0 / (n_set * cavity.kappa) / (1.0 + nu_set * nu_set);
        (s_shot * config.fs / 2.0).sqrt()
    } else {
        0.0
    };
    let record_y = config.record.iter().any(|n| n == "y") || config.feedback.is_some();
    let sigma_imp = (config.imprecision_m2_per_hz * config.fs / 2.0).sqrt();
    let sigma_qba = if config.qba_force && n_set > 0.0 {
        let s_nn = 8.0 * n_set / (cavity.kappa * (1.0 + nu_set * nu_set));
        (s_nn * config.fs / 2.0).sqrt()
    } else {
        0.0
    };

    let mut shot_rng = stream(config.seed, Role::Shot, 0);
    let mut imp_rng = stream(config.seed, Role::Imprecision, 0);
    let mut qba_rng = stream(config.seed, Role::Quantum, 0);

    // Feedback state-variable filter and its one-sample pipeline register.
    let (svf_f1, svf_q1, svf_vhat_scale) = match &config.feedback {
        Some(fb) => (
            2.0 * (std::f64::consts::PI * fb.center_hz / config.fs).sin(),
            1.0 / fb.q,
            TWO_PI * fb.center_hz / fb.q,
        ),
        None => (0.0, 0.0, 0.0),
    };
    let (mut svf_lp, mut svf_bp) = (0.0f64, 0.0f64);
    let mut vhat_prev = 0.0f64;

    // First-order cavity field (used only with `cavity_filter`).
    let mut field = num_complex::Complex64::new(
        (n_resonant / (1.0 + nu_set * nu_set)).sqrt(),
        0.0,
    );

    let lock_alpha = if config.lock_tau_s > 0.0 {
        h / config.lock_tau_s
    } else {
        0.0
    };
    let mut lock_ema = 0.0f64;

    let mut channels: Vec<Vec<f64>> =
        vec![Vec::with_capacity(n_samples); config.record.len()];

    for step in 0..total_steps {
        let dnu_mech: f64 = modes.iter().map(|m| m.pull * m.x).sum();
        if lock_alpha > 0.0 {
            lock_ema += lock_alpha * (dnu_mech - lock_ema);
        }
        let nu_tot = nu_set + dnu_mech - lock_ema;

        let n_c = if config.cavity_filter {
            let delta = nu_tot * cavity.kappa / 2.0;
            let phi = (num_complex::Complex64::new(-0.5 * cavity.kappa, delta) * h).exp();
            let a_ss = num_complex::Complex64::new(n_resonant.sqrt(), 0.0)
                / num_complex::Complex64::new(1.0, -nu_tot);
            field = phi * field + (num_complex::Complex64::new(1.0, 0.0) - phi) * a_ss;
            field.norm_sqr()
        } else {
            n_resonant / (1.0 + nu_tot * nu_tot)
        };

        let y = if record_y {
            let bare: f64 = modes
                .iter()
                .zip(&sys.modes)
                .map(|(st, m)| (m.coupling_g / probe_g) * st.x)
                .sum();
            let noise: f64 = StandardNormal.sample(&mut imp_rng);
            bare + sigma_imp * noise
        } else {
            0.0
        };

        if step >= settle {
            for (slot, name) in channels.iter_mut().zip(&config.record) {
                let value = match name.as_str() {
                    "y" => y,
                    "nu" => nu_tot,
                    "intensity" => {
                        let noise: f64 = StandardNormal.sample(&mut shot_rng);
                        (n_c - n_set) / n_set + sigma_shot * noise
                    }
                    xj => {
                        let j: usize = xj[1..].parse().expect("validated channel");
                        modes[j].x
                    }
                };
                slot.push(value);
            }
        } else if record_intensity {
            // Keep the shot stream aligned across settle and record phases.
            let _: f64 = StandardNormal.sample(&mut shot_rng);
        }

        let qba_kick = if sigma_qba > 0.0 {
            let noise: f64 = StandardNormal.sample(&mut qba_rng);
            sigma_qba * noise
        } else {
            0.0
        };

        let fb_force = if config.feedback.is_some() {
            let force = -config.feedback.as_ref().unwrap().gain_n_s_per_m * vhat_prev;
            svf_lp += svf_f1 * svf_bp;
            let hp = y - svf_lp - svf_q1 * svf_bp;
            svf_bp += svf_f1 * hp;
            vhat_prev = svf_vhat_scale * hp;
            force
        } else {
            0.0
        };

        let dn = n_c - n_set + qba_kick;
        for (j, mode) in modes.iter_mut().enumerate() {
            let radiation = if j == sys.probe_index && !config.probe_force_enabled {
                0.0
            } else {
                mode.hbar_g * dn
            };
            mode.advance(radiation + fb_force, h);
            if mode.x.abs() > mode.limit {
                return Err(Error::Instability {
                    time_s: step as f64 * h,
                    reason: format!(
                        "mode {j} left the physical envelope (|x| > {:.3e} m)",
                        mode.limit
                    ),
                });
            }
        }
    }

    Ok(SimRecord {
        header: RecordHeader {
            fs: config.fs,
            seed: config.seed,
            channel_names: config.record.clone(),
            n_samples,
            config: config.clone(),
        },
        channels,
    })
}
