//! Welch-averaged spectral estimation.
//!
//! One-sided estimate from K (possibly overlapping) windowed segments:
//!
//! ```text
//!  Ŝ_k = c_k / (fs · Σw² · K) · Σ_seg |X_k|²,   c_k = 2 (1 at DC, Nyquist)
//! ```
//!
//! so that Σ Ŝ_k df equals the mean square of the input (Parseval, exact for
//! a rectangular window and a single segment).  Magnitude-squared coherence
//! uses the same segmentation:
//!
//! ```text
//!  γ²(f) = |Σ X* Y|² / (Σ|X|² Σ|Y|²)
//! ```
//!
//! whose bias floor for independent inputs is 1/K (at zero overlap).

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::FrequencyGrid;
use super::psd::{Psd, PsdUnits};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Periodic Hann window, the default for noise work.
    Hann,
    /// Rectangular window, for Parseval-exact checks and transient captures.
    Rect,
}

impl Window {
    fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|j| {
                    0.5 * (1.0
                        - (crate::constants::TWO_PI * j as f64 / n as f64).cos())
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WelchConfig {
    /// Samples per segment (even).
    pub segment_len: usize,
    /// Fractional overlap between consecutive segments, 0 ≤ overlap ≤ 0.95.
    pub overlap: f64,
    pub window: Window,
    /// Remove each segment's mean before windowing.
    pub detrend_mean: bool,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_len: 4096,
            overlap: 0.5,
            window: Window::Hann,
            detrend_mean: true,
        }
    }
}

impl WelchConfig {
    fn validate(&self) -> Result<()> {
        if self.segment_len < 8 || self.segment_len % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "segment_len",
                reason: "must be even and at least 8",
                value: self.segment_len as f64,
            });
        }
        if !(0.0..=0.95).contains(&self.overlap) {
            return Err(Error::InvalidParameter {
                name: "overlap",
                reason: "must lie in [0, 0.95]",
                value: self.overlap,
            });
        }
        Ok(())
    }

    fn hop(&self) -> usize {
        ((self.segment_len as f64) * (1.0 - self.overlap)).round().max(1.0) as usize
    }

    /// Number of segments a record of `n_samples` yields.
    pub fn segments_in(&self, n_samples: usize) -> usize {
        if n_samples < self.segment_len {
            0
        } else {
            1 + (n_samples - self.segment_len) / self.hop()
        }
    }
}

#[derive(Debug, Clone)]
pub struct WelchEstimate {
    pub psd: Psd,
    pub segments: usize,
}

#[derive(Debug, Clone)]
pub struct CoherenceEstimate {
    pub grid: FrequencyGrid,
    /// Magnitude-squared coherence per bin, in [0, 1].
    pub msc: Vec<f64>,
    /// Phase of the averaged cross spectrum ⟨X*Y⟩ per bin [rad].
    pub phase_rad: Vec<f64>,
    pub segments: usize,
}

struct SegmentedFft<'a> {
    x: &'a [f64],
    window: Vec<f64>,
    hop: usize,
    segments: usize,
    detrend: bool,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl<'a> SegmentedFft<'a> {
    fn new(x: &'a [f64], cfg: &WelchConfig, planner: &mut FftPlanner<f64>) -> Result<Self> {
        cfg.validate()?;
        let segments = cfg.segments_in(x.len());
        if segments == 0 {
            return Err(Error::InsufficientData(format!(
                "{} samples cannot fill one {}-sample segment",
                x.len(),
                cfg.segment_len
            )));
        }
        Ok(Self {
            x,
            window: cfg.window.coefficients(cfg.segment_len),
            hop: cfg.hop(),
            segments,
            detrend: cfg.detrend_mean,
            fft: planner.plan_fft_forward(cfg.segment_len),
        })
    }

    fn segment(&self, i: usize, buf: &mut [Complex64]) {
        let n = self.window.len();
        let seg = &self.x[i * self.hop..i * self.hop + n];
        let mean = if self.detrend {
            seg.iter().sum::<f64>() / n as f64
        } else {
            0.0
        };
        for (j, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new((seg[j] - mean) * self.window[j], 0.0);
        }
        self.fft.process(buf);
    }

    fn window_power(&self) -> f64 {
        self.window.iter().map(|w| w * w).sum()
    }
}

/// Welch power spectral density of `x` sampled at `fs`, tagged with `units`.
pub fn welch_psd(x: &[f64], fs: f64, units: PsdUnits, cfg: &WelchConfig) -> Result<WelchEstimate> {
    let mut planner = FftPlanner::new();
    let seg = SegmentedFft::new(x, cfg, &mut planner)?;
    let n = cfg.segment_len;
    let half = n / 2;
    let mut acc = vec![0.0f64; half + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..seg.segments {
        seg.segment(i, &mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
    }
    let norm = fs * seg.window_power() * seg.segments as f64;
    let values: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let fold = if k == 0 || k == half { 1.0 } else { 2.0 };
            fold * a / norm
        })
        .collect();
    let grid = FrequencyGrid::from_fft(fs, n)?;
    Ok(WelchEstimate {
        psd: Psd::new(grid, values, units)?,
        segments: seg.segments,
    })
}

/// Magnitude-squared coherence and cross phase between two equally long,
/// simultaneously sampled records.
pub fn coherence(x: &[f64], y: &[f64], fs: f64, cfg: &WelchConfig) -> Result<CoherenceEstimate> {
    if x.len() != y.len() {
        return Err(Error::GridMismatch(format!(
            "records differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let mut planner = FftPlanner::new();
    let sx = SegmentedFft::new(x, cfg, &mut planner)?;
    let sy = SegmentedFft::new(y, cfg, &mut planner)?;
    let n = cfg.segment_len;
    let half = n / 2;
    let mut axx = vec![0.0f64; half + 1];
    let mut ayy = vec![0.0f64; half + 1];
    let mut axy = vec![Complex64::new(0.0, 0.0); half + 1];
    let mut bx = vec![Complex64::new(0.0, 0.0); n];
    let mut by = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..sx.segments {
        sx.segment(i, &mut bx);
        sy.segment(i, &mut by);
        for k in 0..=half {
            axx[k] += bx[k].norm_sqr();
            ayy[k] += by[k].norm_sqr();
            axy[k] += bx[k].conj() * by[k];
        }
    }
    let mut msc = Vec::with_capacity(half + 1);
    let mut phase = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let denom = axx[k] * ayy[k];
        msc.push(if denom > 0.0 {
            (axy[k].norm_sqr() / denom).min(1.0)
        } else {
            0.0
        });
        phase.push(axy[k].arg());
    }
    Ok(CoherenceEstimate {
        grid: FrequencyGrid::from_fft(fs, n)?,
        msc,
        phase_rad: phase,
        segments: sx.segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rectangular_single_segment_is_parseval_exact() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let n = 1024;
        let x: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let cfg = WelchConfig {
            segment_len: n,
            overlap: 0.0,
            window: Window::Rect,
            detrend_mean: false,
        };
        let fs = 512.0;
        let est = welch_psd(&x, fs, PsdUnits::Dimensionless, &cfg).unwrap();
        assert_eq!(est.segments, 1);
        let bins: f64 = est.psd.values.iter().sum::<f64>() * est.psd.grid.df;
        let mean_square = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert_relative_eq!(bins, mean_square, max_relative = 1e-12);
    }

    #[test]
    fn sine_band_power_recovers_amplitude() {
        let fs = 1024.0;
        let amp = 0.37;
        let f0 = 100.0;
        let n = 1 << 16;
        let x: Vec<f64> = (0..n)
            .map(|j| amp * (crate::constants::TWO_PI * f0 * j as f64 / fs).sin())
            .collect();
        let cfg = WelchConfig {
            segment_len: 1024,
            ..WelchConfig::default()
        };
        let est = welch_psd(&x, fs, PsdUnits::Dimensionless, &cfg).unwrap();
        let band = est.psd.band_power(f0 - 5.0, f0 + 5.0).unwrap();
        assert_relative_eq!(band, amp * amp / 2.0, max_relative = 5e-3);
    }

    #[test]
    fn white_noise_level_and_scatter_follow_statistics() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let sigma = 1.3;
        let n = 1 << 20;
        let fs = 2048.0;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                sigma
                    * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let cfg = WelchConfig::default();
        let est = welch_psd(&x, fs, PsdUnits::Dimensionless, &cfg).unwrap();
        assert!(est.segments >= 200);
        let expected = 2.0 * sigma * sigma / fs;
        let mean = est.psd.band_mean(50.0, 950.0).unwrap();
        assert_relative_eq!(mean, expected, max_relative = 0.02);

        // Per-bin scatter should look like 1/√K_eff, not vanish and not blow up.
        let band = est.psd.grid.band(50.0, 950.0).unwrap();
        let vals = &est.psd.values[*band.start()..=*band.end()];
        let m: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
        let var: f64 =
            vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (vals.len() - 1) as f64;
        let rel = var.sqrt() / m;
        let k = est.segments as f64;
        assert!(rel > 0.2 / k.sqrt(), "scatter {rel} implausibly small");
        assert!(rel < 3.0 / (k / 2.0).sqrt(), "scatter {rel} implausibly large");
    }

    #[test]
    fn total_power_of_white_noise_matches_variance() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let n = 1 << 18;
        let x: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let est = welch_psd(&x, 4096.0, PsdUnits::Dimensionless, &WelchConfig::default())
            .unwrap();
        assert_relative_eq!(est.psd.total_power(), 1.0, max_relative = 0.03);
    }

    #[test]
    fn coherence_is_one_for_copies_and_biased_floor_for_independents() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let n = 1 << 17;
        let fs = 1024.0;
        let x: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let cfg = WelchConfig {
            segment_len: 512,
            overlap: 0.0,
            ..WelchConfig::default()
        };

        let same = coherence(&x, &x, fs, &cfg).unwrap();
        assert!(same.msc.iter().skip(1).all(|c| *c > 0.999));

        let indep = coherence(&x, &y, fs, &cfg).unwrap();
        let k = indep.segments as f64;
        let band = indep.grid.band(10.0, 500.0).unwrap();
        let mean: f64 = indep.msc[*band.start()..=*band.end()].iter().sum::<f64>()
            / (band.end() - band.start() + 1) as f64;
        assert!(mean < 3.0 / k, "independent coherence {mean} ≫ 1/K = {}", 1.0 / k);
        assert!(mean > 0.1 / k);
    }

    #[test]
    fn phase_tracks_a_pure_delay() {
        let fs = 1024.0;
        let f0 = 64.0;
        let n = 1 << 15;
        let x: Vec<f64> = (0..n)
            .map(|j| (crate::constants::TWO_PI * f0 * j as f64 / fs).sin())
            .collect();
        // Quarter period at f0 = 4-sample delay.
        let y: Vec<f64> = (0..n)
            .map(|j| (crate::constants::TWO_PI * f0 * (j as f64 - 4.0) / fs).sin())
            .collect();
        let cfg = WelchConfig {
            segment_len: 1024,
            ..WelchConfig::default()
        };
        let est = coherence(&x, &y, fs, &cfg).unwrap();
        let k = est.grid.index_of(f0).unwrap();
        assert!(est.msc[k] > 0.999);
        assert_relative_eq!(
            est.phase_rad[k],
            -std::f64::consts::FRAC_PI_2,
            epsilon = 1e-3
        );
    }

    #[test]
    fn short_records_and_bad_configs_are_rejected() {
        let x = vec![0.0; 100];
        assert!(matches!(
            welch_psd(&x, 1.0, PsdUnits::Dimensionless, &WelchConfig::default()),
            Err(Error::InsufficientData(_))
        ));
        let cfg = WelchConfig {
            segment_len: 11,
            ..WelchConfig::default()
        };
        assert!(welch_psd(&x, 1.0, PsdUnits::Dimensionless, &cfg).is_err());
    }
}
