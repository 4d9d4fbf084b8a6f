//! One-sided power spectral densities with unit tags and CSV round trip.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::FrequencyGrid;
use crate::{Error, Result};

/// What a spectral value measures.  Arithmetic between spectra is only
/// allowed when the tags match, so a budget cannot silently mix N²/Hz with
/// relative intensity noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdUnits {
    /// Displacement spectrum [m²/Hz]
    DisplacementSq,
    /// Force spectrum [N²/Hz]
    ForceSq,
    /// Normalized-detuning (ν = 2Δ/κ) spectrum [1/Hz]
    FrequencyNoise,
    /// Relative intensity noise [1/Hz]
    Rin,
    /// Optical phase spectrum [rad²/Hz]
    PhaseSq,
    /// Unitless ratios (coherence, transfer magnitudes)
    Dimensionless,
}

impl PsdUnits {
    pub fn label(&self) -> &'static str {
        match self {
            PsdUnits::DisplacementSq => "m2_per_hz",
            PsdUnits::ForceSq => "n2_per_hz",
            PsdUnits::FrequencyNoise => "nu2_per_hz",
            PsdUnits::Rin => "rin_per_hz",
            PsdUnits::PhaseSq => "rad2_per_hz",
            PsdUnits::Dimensionless => "dimensionless",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "m2_per_hz" => PsdUnits::DisplacementSq,
            "n2_per_hz" => PsdUnits::ForceSq,
            "nu2_per_hz" => PsdUnits::FrequencyNoise,
            "rin_per_hz" => PsdUnits::Rin,
            "rad2_per_hz" => PsdUnits::PhaseSq,
            "dimensionless" => PsdUnits::Dimensionless,
            other => return Err(Error::Parse(format!("unknown units tag {other:?}"))),
        })
    }
}

impl fmt::Display for PsdUnits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A one-sided spectral density on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    pub units: PsdUnits,
}

impl Psd {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>, units: PsdUnits) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!(
                "{} values on a {}-bin grid",
                values.len(),
                grid.n
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "spectral values must be finite",
                value: *bad,
            });
        }
        Ok(Self { grid, values, units })
    }

    /// Evaluate a function of frequency on every bin of a grid.
    pub fn from_fn(
        grid: FrequencyGrid,
        units: PsdUnits,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = (0..grid.n).map(|k| f(grid.f(k))).collect();
        Self::new(grid, values, units)
    }

    /// Value at the bin nearest `f_hz`.
    pub fn value_at(&self, f_hz: f64) -> Result<f64> {
        Ok(self.values[self.grid.index_of(f_hz)?])
    }

    /// Trapezoidal band power ∫ S df over [f_lo, f_hi].
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        let band = self.grid.band(f_lo, f_hi)?;
        let (lo, hi) = (*band.start(), *band.end());
        if lo == hi {
            return Ok(self.values[lo] * self.grid.df);
        }
        let inner: f64 = self.values[lo + 1..hi].iter().sum();
        Ok((0.5 * (self.values[lo] + self.values[hi]) + inner) * self.grid.df)
    }

    /// Total power ∫ S df over the whole grid.
    pub fn total_power(&self) -> f64 {
        let n = self.values.len();
        if n == 1 {
            return self.values[0] * self.grid.df;
        }
        let inner: f64 = self.values[1..n - 1].iter().sum();
        (0.5 * (self.values[0] + self.values[n - 1]) + inner) * self.grid.df
    }

    /// Mean level over [f_lo, f_hi].
    pub fn band_mean(&self, f_lo: f64, f_hi: f64) -> Result<f64> {
        let band = self.grid.band(f_lo, f_hi)?;
        let (lo, hi) = (*band.start(), *band.end());
        let sum: f64 = self.values[lo..=hi].iter().sum();
        Ok(sum / (hi - lo + 1) as f64)
    }

    /// Peak bin over [f_lo, f_hi]: (frequency, value).
    pub fn band_peak(&self, f_lo: f64, f_hi: f64) -> Result<(f64, f64)> {
        let band = self.grid.band(f_lo, f_hi)?;
        let (lo, hi) = (*band.start(), *band.end());
        let (k, v) = self.values[lo..=hi]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (lo + k, *v))
            .expect("band is non-empty");
        Ok((self.grid.f(k), v))
    }

    /// Bin-wise sum; grids and units must match.
    pub fn add(&self, other: &Psd) -> Result<Psd> {
        self.grid.require_compatible(&other.grid)?;
        if self.units != other.units {
            return Err(Error::GridMismatch(format!(
                "cannot add {} to {}",
                other.units, self.units
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Psd::new(self.grid, values, self.units)
    }

    /// Bin-wise scale by a dimensionless constant.
    pub fn scale(&self, k: f64) -> Psd {
        Psd {
            grid: self.grid,
            values: self.values.iter().map(|v| v * k).collect(),
            units: self.units,
        }
    }

    /// Write `# units=… sidedness=one_sided` header plus
    /// `frequency_hz,value` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# units={} sidedness=one_sided", self.units)?;
        writeln!(out, "frequency_hz,value")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.12e},{:.12e}", self.grid.f(k), v)?;
        }
        Ok(())
    }

    /// Read a spectrum written by [`Psd::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Psd> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut units = None;
        let mut freqs: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for token in rest.split_whitespace() {
                    if let Some(u) = token.strip_prefix("units=") {
                        units = Some(PsdUnits::parse(u)?);
                    }
                }
                continue;
            }
            if line.starts_with("frequency_hz") {
                continue;
            }
            let mut cols = line.split(',');
            let (f, v) = match (cols.next(), cols.next()) {
                (Some(f), Some(v)) => (f, v),
                _ => return Err(Error::Parse(format!("bad spectrum row {line:?}"))),
            };
            freqs.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad frequency {f:?}: {e}")))?,
            );
            values.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {v:?}: {e}")))?,
            );
        }
        let units = units.ok_or_else(|| Error::Parse("missing units header".into()))?;
        if freqs.len() < 2 {
            return Err(Error::InsufficientData(
                "spectrum file needs at least two rows".into(),
            ));
        }
        let df = freqs[1] - freqs[0];
        let grid = FrequencyGrid::new(freqs[0], df, freqs.len())?;
        for (k, f) in freqs.iter().enumerate() {
            if (f - grid.f(k)).abs() > 1e-6 * grid.df {
                return Err(Error::Parse(format!(
                    "non-uniform frequency column near row {k}"
                )));
            }
        }
        Psd::new(grid, values, units)
    }
}

/// Power ratio in decibel.
pub fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lorentzian_psd() -> Psd {
        let grid = FrequencyGrid::new(0.0, 0.1, 4001).unwrap();
        Psd::from_fn(grid, PsdUnits::FrequencyNoise, |f| {
            let hw = 2.0;
            1.0 / (1.0 + ((f - 100.0) / hw).powi(2))
        })
        .unwrap()
    }

    #[test]
    fn band_power_matches_lorentzian_area() {
        let psd = lorentzian_psd();
        // Half-width 2 Hz Lorentzian: area = π·hw, tails well inside grid.
        assert_relative_eq!(psd.total_power(), std::f64::consts::PI * 2.0, max_relative = 2e-2);
        let core = psd.band_power(80.0, 120.0).unwrap();
        assert!(core > 0.9 * psd.total_power());
    }

    #[test]
    fn peak_is_found_at_line_center() {
        let psd = lorentzian_psd();
        let (f, v) = psd.band_peak(50.0, 150.0).unwrap();
        assert_relative_eq!(f, 100.0, max_relative = 1e-9);
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn add_enforces_units_and_grid() {
        let psd = lorentzian_psd();
        let sum = psd.add(&psd).unwrap();
        assert_relative_eq!(sum.value_at(100.0).unwrap(), 2.0, max_relative = 1e-12);

        let mut other = psd.clone();
        other.units = PsdUnits::Rin;
        assert!(psd.add(&other).is_err());

        let short = Psd::new(
            FrequencyGrid::new(0.0, 0.1, 5).unwrap(),
            vec![0.0; 5],
            PsdUnits::FrequencyNoise,
        )
        .unwrap();
        assert!(psd.add(&short).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_grid_units_and_values() {
        let psd = lorentzian_psd();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spectrum.csv");
        psd.write_csv(&path).unwrap();
        let back = Psd::read_csv(&path).unwrap();
        assert_eq!(back.units, psd.units);
        assert!(back.grid.compatible(&psd.grid));
        for (a, b) in psd.values.iter().zip(&back.values) {
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
    }

    #[test]
    fn rejects_non_finite_values() {
        let grid = FrequencyGrid::new(0.0, 1.0, 3).unwrap();
        assert!(Psd::new(grid, vec![0.0, f64::NAN, 1.0], PsdUnits::Rin).is_err());
    }
}
