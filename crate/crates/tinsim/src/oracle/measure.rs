//! Spectral measurements on simulation records.
//!
//! Thin bridge from recorded time series to the Welch estimator, plus the
//! band bookkeeping used when comparing a measured spectrum against a model:
//! logarithmically spaced sub-bands with exclusion zones (so mechanical
//! resonances can be dropped from a broadband comparison) and per-band
//! level ratios in dB.

use crate::spectra::{welch_psd, Psd, PsdUnits, WelchConfig, WelchEstimate};
use crate::{Error, Result};

use super::SimRecord;

/// Welch PSD of one recorded channel.
pub fn psd_of_channel(
    record: &SimRecord,
    name: &str,
    units: PsdUnits,
    config: &WelchConfig,
) -> Result<WelchEstimate> {
    welch_psd(record.channel(name)?, record.header.fs, units, config)
}

/// `count` log-spaced sub-bands covering [f_lo, f_hi], dropping any band
/// that overlaps an exclusion interval.
pub fn log_subbands(
    f_lo: f64,
    f_hi: f64,
    count: usize,
    exclude: &[(f64, f64)],
) -> Result<Vec<(f64, f64)>> {
    if !(f_lo > 0.0 && f_hi > f_lo) || count == 0 {
        return Err(Error::InvalidParameter {
            name: "f_lo",
            reason: "need 0 < f_lo < f_hi and at least one band",
            value: f_lo,
        });
    }
    let ratio = (f_hi / f_lo).powf(1.0 / count as f64);
    let bands = (0..count)
        .map(|k| {
            let lo = f_lo * ratio.powi(k as i32);
            (lo, lo * ratio)
        })
        .filter(|&(lo, hi)| !exclude.iter().any(|&(e_lo, e_hi)| lo < e_hi && hi > e_lo))
        .collect::<Vec<_>>();
    if bands.is_empty() {
        return Err(Error::InsufficientData(
            "every sub-band fell inside an exclusion zone".into(),
        ));
    }
    Ok(bands)
}

/// Mean-level ratio measured/model per band, in dB.
pub fn subband_ratios_db(
    measured: &Psd,
    model: &Psd,
    bands: &[(f64, f64)],
) -> Result<Vec<f64>> {
    measured.grid.require_compatible(&model.grid)?;
    bands
        .iter()
        .map(|&(lo, hi)| {
            let num = measured.band_mean(lo, hi)?;
            let den = model.band_mean(lo, hi)?;
            if den <= 0.0 {
                return Err(Error::InsufficientData(format!(
                    "model level vanishes in [{lo}, {hi}] Hz"
                )));
            }
            Ok(crate::spectra::db(num / den))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::FrequencyGrid;

    #[test]
    fn subbands_cover_the_decade_and_respect_exclusions() {
        let bands = log_subbands(100.0, 1000.0, 10, &[]).unwrap();
        assert_eq!(bands.len(), 10);
        assert!((bands[0].0 - 100.0).abs() < 1e-9);
        assert!((bands[9].1 - 1000.0).abs() < 1e-6);
        for w in bands.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-9);
        }

        let with_hole = log_subbands(100.0, 1000.0, 10, &[(290.0, 330.0)]).unwrap();
        assert!(with_hole.len() < 10);
        assert!(with_hole
            .iter()
            .all(|&(lo, hi)| hi <= 290.0 || lo >= 330.0));
    }

    #[test]
    fn ratios_report_db_per_band() {
        let grid = FrequencyGrid::new(0.0, 1.0, 2049).unwrap();
        let a = Psd::from_fn(grid, PsdUnits::Rin, |_| 2e-12).unwrap();
        let b = Psd::from_fn(grid, PsdUnits::Rin, |_| 1e-12).unwrap();
        let bands = log_subbands(10.0, 1000.0, 5, &[]).unwrap();
        let ratios = subband_ratios_db(&a, &b, &bands).unwrap();
        for r in ratios {
            assert!((r - 3.0103).abs() < 1e-6);
        }
    }
}
