//! Scenario files: the plain-text front door of the batch interface.
//!
//! A scenario is a TOML document with nested sections and unit-suffixed
//! keys, all values SI except frequencies, which are ordinary hertz at the
//! boundary (angular rates are an internal convention).  Unknown keys are
//! rejected with the parser's location diagnostics, so typos fail loudly
//! instead of silently falling back to defaults.
//!
//! ```toml
//! [[modes]]
//! frequency_hz = 410.0
//! quality_factor = 1000.0
//! mass_kg = 1e-9
//! coupling_hz_per_m = 5.083e13
//! temperature_k = 298.0
//! damping = "viscous"
//!
//! [cavity]
//! linewidth_hz = 1e6
//! detuning_nu = 0.0
//! wavelength_m = 786e-9
//! detection_efficiency = 0.4
//!
//! [drive]
//! photon_number = 1e6        # or: input_power_w = 2e-4
//!
//! [grid]
//! sample_rate_hz = 16384.0
//! segment_len = 65536
//! ```
//!
//! Optional sections configure the time-domain oracle (`[oracle]`,
//! `[feedback]`), budget extras (`[budget]`), the detuning sweep of the
//! intermodulation pipeline (`[tin]`), and the cooperativity landscape scan
//! (`[landscape]`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backaction::LandscapeConfig;
use crate::calibration::BudgetExtras;
use crate::constants::TWO_PI;
use crate::oracle::{FeedbackConfig, SimConfig};
use crate::params::{
    omega_laser_from_wavelength, CavityParams, Damping, MechanicalMode, SystemParams,
};
use crate::spectra::{FrequencyGrid, WelchConfig, Window};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub frequency_hz: f64,
    pub quality_factor: f64,
    pub mass_kg: f64,
    /// Frequency pull ∂f_c/∂x [Hz/m].
    pub coupling_hz_per_m: f64,
    pub temperature_k: f64,
    pub damping: Damping,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    /// Full linewidth κ/2π [Hz].
    pub linewidth_hz: f64,
    /// Relative detuning ν = 2Δ/κ.
    pub detuning_nu: f64,
    pub wavelength_m: f64,
    pub detection_efficiency: f64,
}

/// Exactly one way of fixing the intracavity photon number.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_number: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_power_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub sample_rate_hz: f64,
    /// Welch segment length; also sets the analysis grid (DC…Nyquist,
    /// df = sample_rate/segment_len).
    pub segment_len: usize,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
}

fn default_overlap() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub duration_s: f64,
    #[serde(default)]
    pub settle_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lock_tau")]
    pub lock_tau_s: f64,
    #[serde(default)]
    pub cavity_filter: bool,
    #[serde(default)]
    pub qba_force: bool,
    #[serde(default = "default_true")]
    pub probe_force_enabled: bool,
    #[serde(default)]
    pub imprecision_m2_per_hz: f64,
    #[serde(default = "default_record")]
    pub record: Vec<String>,
}

fn default_lock_tau() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

fn default_record() -> Vec<String> {
    vec!["y".into(), "intensity".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackSection {
    pub center_hz: f64,
    pub q: f64,
    pub gain_n_s_per_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default)]
    pub imprecision_m2_per_hz: f64,
    #[serde(default)]
    pub laser_detuning_noise_nu2_per_hz: f64,
    #[serde(default)]
    pub classical_rin_per_hz: f64,
    #[serde(default = "default_true")]
    pub include_quantum_backaction: bool,
    #[serde(default = "default_correction")]
    pub correction: f64,
}

fn default_correction() -> f64 {
    1.0
}

/// Detuning sweep of band-integrated intermodulation noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TinSection {
    #[serde(default = "default_nu_min")]
    pub nu_min: f64,
    #[serde(default = "default_nu_max")]
    pub nu_max: f64,
    #[serde(default = "default_nu_points")]
    pub nu_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_lo_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_hi_hz: Option<f64>,
}

fn default_nu_min() -> f64 {
    -1.2
}

fn default_nu_max() -> f64 {
    1.2
}

fn default_nu_points() -> usize {
    97
}

impl Default for TinSection {
    fn default() -> Self {
        Self {
            nu_min: default_nu_min(),
            nu_max: default_nu_max(),
            nu_points: default_nu_points(),
            band_lo_hz: None,
            band_hi_hz: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSection {
    pub kappa_scales: Vec<f64>,
    pub temperatures_k: Vec<f64>,
    pub photon_lo: f64,
    pub photon_hi: f64,
    pub photon_points: usize,
    /// Band intermodulation level of this system at its own κ and T [1/Hz].
    pub s_tin_ref: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub modes: Vec<ModeSection>,
    pub cavity: CavitySection,
    pub drive: DriveSection,
    pub grid: GridSection,
    #[serde(default)]
    pub probe_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<FeedbackSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tin: Option<TinSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeSection>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        scenario.system()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Physical parameters with the photon number resolved from the drive.
    pub fn system(&self) -> Result<SystemParams> {
        let modes: Vec<MechanicalMode> = self
            .modes
            .iter()
            .map(|m| MechanicalMode {
                mass_kg: m.mass_kg,
                omega_m: TWO_PI * m.frequency_hz,
                gamma_m: TWO_PI * m.frequency_hz / m.quality_factor,
                coupling_g: TWO_PI * m.coupling_hz_per_m,
                temperature_k: m.temperature_k,
                damping: m.damping,
            })
            .collect();
        let mut cavity = CavityParams {
            kappa: TWO_PI * self.cavity.linewidth_hz,
            detuning_nu: self.cavity.detuning_nu,
            n_cav: 0.0,
            omega_laser: omega_laser_from_wavelength(self.cavity.wavelength_m),
            eta: self.cavity.detection_efficiency,
        };
        cavity.n_cav = match (self.drive.photon_number, self.drive.input_power_w) {
            (Some(n), None) => n,
            (None, Some(p)) => cavity.photon_number_from_power(p),
            (Some(_), Some(_)) => {
                return Err(Error::Parse(
                    "[drive]: photon_number and input_power_w are mutually exclusive".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Parse(
                    "[drive]: set either photon_number or input_power_w".into(),
                ))
            }
        };
        let system = SystemParams {
            modes,
            cavity,
            probe_index: self.probe_index,
        };
        system.validate()?;
        Ok(system)
    }

    /// Analysis grid implied by the Welch settings: DC to Nyquist at
    /// df = fs/segment_len.
    pub fn analysis_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::from_fft(self.grid.sample_rate_hz, self.grid.segment_len)
    }

    pub fn welch_config(&self) -> WelchConfig {
        WelchConfig {
            segment_len: self.grid.segment_len,
            overlap: self.grid.overlap,
            window: Window::Hann,
            detrend_mean: true,
        }
    }

    /// Simulation configuration; requires an `[oracle]` section.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let oracle = self.oracle.as_ref().ok_or_else(|| {
            Error::Parse("this command needs an [oracle] section in the scenario".into())
        })?;
        let config = SimConfig {
            system: self.system()?,
            fs: self.grid.sample_rate_hz,
            duration_s: oracle.duration_s,
            settle_s: oracle.settle_s,
            seed: oracle.seed,
            lock_tau_s: oracle.lock_tau_s,
            cavity_filter: oracle.cavity_filter,
            qba_force: oracle.qba_force,
            probe_force_enabled: oracle.probe_force_enabled,
            imprecision_m2_per_hz: oracle.imprecision_m2_per_hz,
            feedback: self.feedback.as_ref().map(|f| FeedbackConfig {
                center_hz: f.center_hz,
                q: f.q,
                gain_n_s_per_m: f.gain_n_s_per_m,
            }),
            record: oracle.record.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn budget_extras(&self) -> BudgetExtras {
        match &self.budget {
            Some(b) => BudgetExtras {
                imprecision_m2_per_hz: b.imprecision_m2_per_hz,
                laser_detuning_noise_nu2_per_hz: b.laser_detuning_noise_nu2_per_hz,
                classical_rin_per_hz: b.classical_rin_per_hz,
                include_quantum_backaction: b.include_quantum_backaction,
                correction: b.correction,
            },
            None => BudgetExtras::default(),
        }
    }

    pub fn tin_sweep(&self) -> TinSection {
        self.tin.clone().unwrap_or_default()
    }

    /// Landscape scan configuration; requires a `[landscape]` section.
    pub fn landscape_config(&self) -> Result<LandscapeConfig> {
        let l = self.landscape.as_ref().ok_or_else(|| {
            Error::Parse("this command needs a [landscape] section in the scenario".into())
        })?;
        Ok(LandscapeConfig {
            kappa_scales: l.kappa_scales.clone(),
            temperatures_k: l.temperatures_k.clone(),
            n_cav_lo: l.photon_lo,
            n_cav_hi: l.photon_hi,
            n_cav_points: l.photon_points,
            s_tin_ref: l.s_tin_ref,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const DESK: &str = r#"
[[modes]]
frequency_hz = 410.0
quality_factor = 1000.0
mass_kg = 1e-9
coupling_hz_per_m = 5.0832e13
temperature_k = 298.0
damping = "viscous"

[[modes]]
frequency_hz = 1830.0
quality_factor = 1000.0
mass_kg = 5e-10
coupling_hz_per_m = 5.0832e13
temperature_k = 298.0
damping = "structural"

[cavity]
linewidth_hz = 1e6
detuning_nu = 0.0
wavelength_m = 786e-9
detection_efficiency = 0.4

[drive]
photon_number = 1e6

[grid]
sample_rate_hz = 65536.0
segment_len = 65536

[oracle]
duration_s = 60.0
seed = 3
record = ["y", "intensity"]
"#;

    #[test]
    fn parses_and_maps_units_to_angular_rates() {
        let scenario = Scenario::parse_str(DESK).unwrap();
        let system = scenario.system().unwrap();
        assert_eq!(system.modes.len(), 2);
        assert_relative_eq!(system.modes[0].omega_m, TWO_PI * 410.0, max_relative = 1e-12);
        assert_relative_eq!(
            system.modes[0].gamma_m,
            TWO_PI * 0.41,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            system.modes[0].coupling_g,
            TWO_PI * 5.0832e13,
            max_relative = 1e-12
        );
        assert_eq!(system.modes[1].damping, Damping::Structural);
        assert_relative_eq!(system.cavity.kappa, TWO_PI * 1e6, max_relative = 1e-12);
        assert_eq!(system.cavity.n_cav, 1e6);

        let grid = scenario.analysis_grid().unwrap();
        assert_relative_eq!(grid.df, 1.0, max_relative = 1e-12);
        let sim = scenario.sim_config().unwrap();
        assert_eq!(sim.seed, 3);
        assert_relative_eq!(sim.lock_tau_s, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn round_trip_preserves_the_system() {
        let scenario = Scenario::parse_str(DESK).unwrap();
        let text = scenario.to_toml_string().unwrap();
        let back = Scenario::parse_str(&text).unwrap();
        let a = scenario.system().unwrap();
        let b = back.system().unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let bad = DESK.replace("detuning_nu = 0.0", "detuning_nu = 0.0\nchirpiness = 3");
        let err = Scenario::parse_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("chirpiness"), "diagnostic was: {msg}");
        assert!(msg.contains("line"), "diagnostic was: {msg}");
    }

    #[test]
    fn drive_must_be_specified_exactly_once() {
        let none = DESK.replace("photon_number = 1e6", "");
        assert!(Scenario::parse_str(&none).is_err());
        let both = DESK.replace(
            "photon_number = 1e6",
            "photon_number = 1e6\ninput_power_w = 1e-4",
        );
        assert!(Scenario::parse_str(&both).is_err());
    }

    #[test]
    fn power_drive_resolves_photons_through_the_cavity() {
        let powered = DESK.replace("photon_number = 1e6", "input_power_w = 2e-4");
        let scenario = Scenario::parse_str(&powered).unwrap();
        let system = scenario.system().unwrap();
        let expected = system.cavity.photon_number_from_power(2e-4);
        assert_relative_eq!(system.cavity.n_cav, expected, max_relative = 1e-12);
        assert!(system.cavity.n_cav > 0.0);
    }

    #[test]
    fn missing_sections_give_actionable_errors() {
        let scenario = Scenario::parse_str(DESK).unwrap();
        assert!(scenario.landscape_config().is_err());
        let no_oracle = {
            let mut s = scenario.clone();
            s.oracle = None;
            s
        };
        assert!(no_oracle.sim_config().is_err());
    }
}
