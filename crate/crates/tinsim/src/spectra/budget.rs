//! Named stack of same-unit spectra on a shared grid.

use std::path::Path;

use super::psd::Psd;
use crate::{Error, Result};

/// A noise budget: independently contributing spectra that sum to the
/// observable total.
#[derive(Debug, Clone, Default)]
pub struct NoiseBudget {
    components: Vec<(String, Psd)>,
}

impl NoiseBudget {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a component; its grid and units must match the existing ones.
    pub fn push(&mut self, name: impl Into<String>, psd: Psd) -> Result<()> {
        if let Some((_, first)) = self.components.first() {
            first.grid.require_compatible(&psd.grid)?;
            if first.units != psd.units {
                return Err(Error::GridMismatch(format!(
                    "budget holds {}, component has {}",
                    first.units, psd.units
                )));
            }
        }
        self.components.push((name.into(), psd));
        Ok(())
    }

    pub fn components(&self) -> impl Iterator<Item = (&str, &Psd)> {
        self.components.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn get(&self, name: &str) -> Option<&Psd> {
        self.components
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
    }

    /// Bin-wise sum of all components.
    pub fn total(&self) -> Result<Psd> {
        let mut iter = self.components.iter();
        let (_, first) = iter
            .next()
            .ok_or_else(|| Error::InsufficientData("budget has no components".into()))?;
        let mut total = first.clone();
        for (_, psd) in iter {
            total = total.add(psd)?;
        }
        Ok(total)
    }

    /// The component carrying the largest share of band power in
    /// [f_lo, f_hi], with its fraction of the total.
    pub fn dominant(&self, f_lo: f64, f_hi: f64) -> Result<(&str, f64)> {
        let total = self.total()?.band_power(f_lo, f_hi)?;
        if total <= 0.0 {
            return Err(Error::NegativeArea(format!(
                "no power in [{f_lo}, {f_hi}] Hz"
            )));
        }
        let mut best: Option<(&str, f64)> = None;
        for (name, psd) in &self.components {
            let p = psd.band_power(f_lo, f_hi)?;
            if best.map_or(true, |(_, b)| p > b * total) {
                best = Some((name.as_str(), p / total));
            }
        }
        Ok(best.expect("budget has components"))
    }

    /// Write one CSV per component plus `total.csv` into `dir`.
    pub fn write_csv_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, psd) in &self.components {
            psd.write_csv(&dir.join(format!("{name}.csv")))?;
        }
        self.total()?.write_csv(&dir.join("total.csv"))
    }
}
