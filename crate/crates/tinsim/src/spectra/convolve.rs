//! Spectrum of the *square* of a Gaussian process.
//!
//! If ν(t) is zero-mean Gaussian with one-sided spectrum S_ν(f), then
//! δ(ν²)(t) = ν² − ⟨ν²⟩ has, by Wick's theorem, the two-sided spectrum
//! 2·(S_ν^{2s} ⋆ S_ν^{2s})(f).  Folding to one side doubles it again, so the
//! one-sided result is
//!
//! ```text
//!  S_{ν²}(f) = 4 · (S_ν^{2s} ⋆ S_ν^{2s})(f),     f ≥ 0,
//! ```
//!
//! implemented here by mirroring the one-sided input to two sides, FFT-based
//! linear convolution, and truncation back to the input grid.  Total output
//! power equals 2σ⁴ (σ² = ∫S_ν df), the exact Gaussian fourth-moment result;
//! the unit tests pin that identity.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::psd::{Psd, PsdUnits};
use crate::{Error, Result};

/// Wick pairing (×2) times the two-sided → one-sided fold (×2).
pub const SELF_CONVOLUTION_PREFACTOR: f64 = 4.0;

/// Input must have decayed at the top of the grid to at most this fraction
/// of its peak, or the mirrored convolution would alias.
const EDGE_DECAY: f64 = 1e-6;

/// Output power beyond the grid top must be at most this fraction of the
/// total.  Kept bins are exact either way (zero-padded linear convolution
/// discards, it never folds); the budget only guards the caller against
/// silently missing a band that mostly lies above the grid.
const TRUNCATION_BUDGET: f64 = 1e-2;

/// One-sided spectrum of δ(ν²) for a Gaussian ν with one-sided spectrum `s`.
///
/// `correction` multiplies the analytic prefactor; the acceptance suite pins
/// it to 1 against the time-domain oracle.  The input must live on a grid
/// starting at DC, be non-negative, and both cover its own support and leave
/// room for the doubled support of the output.
pub fn self_convolve(s: &Psd, correction: f64) -> Result<Psd> {
    if !(correction > 0.0) || !correction.is_finite() {
        return Err(Error::InvalidParameter {
            name: "correction",
            reason: "must be finite and positive",
            value: correction,
        });
    }
    if s.units != PsdUnits::FrequencyNoise {
        return Err(Error::GridMismatch(format!(
            "self-convolution is defined for normalized-detuning spectra, got {}",
            s.units
        )));
    }
    if s.grid.f_start != 0.0 {
        return Err(Error::GridMismatch(
            "self-convolution needs the full one-sided support starting at DC".into(),
        ));
    }
    let n = s.grid.n;
    if n < 8 {
        return Err(Error::InsufficientData(
            "self-convolution needs at least 8 bins".into(),
        ));
    }
    let peak = s.values.iter().cloned().fold(0.0f64, f64::max);
    if let Some(bad) = s.values.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeArea(format!(
            "input spectrum has negative value {bad}"
        )));
    }
    if peak == 0.0 {
        // An uncoupled system has no detuning noise; its squared spectrum
        // is legitimately zero everywhere.
        return Psd::new(s.grid, vec![0.0; n], s.units);
    }
    if s.values[n - 1] > EDGE_DECAY * peak {
        return Err(Error::Aliasing(format!(
            "input has not decayed at the grid top: S(f_max)/S_peak = {:.3e}",
            s.values[n - 1] / peak
        )));
    }

    // Mirror to a two-sided density S^{2s}(±f) = S(f)/2 on a circular buffer
    // long enough that linear convolution (support 4n−3 bins) cannot wrap.
    let m = (4 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        let v = 0.5 * s.values[k];
        buf[k] = Complex64::new(v, 0.0);
        if k > 0 {
            buf[m - k] = Complex64::new(v, 0.0);
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for v in buf.iter_mut() {
        *v = *v * *v;
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    // Convolution theorem: (a ⋆ a)[k] df = IFFT(FFT(a)²)[k]/M · df.
    let scale = s.grid.df / m as f64;
    let gain = SELF_CONVOLUTION_PREFACTOR * correction;
    let full: Vec<f64> = (0..2 * n - 1)
        .map(|k| (buf[k].re * scale).max(0.0) * gain)
        .collect();

    let kept: f64 = full[..n].iter().sum();
    let lost: f64 = full[n..].iter().sum();
    if lost > TRUNCATION_BUDGET * (kept + lost) {
        return Err(Error::Aliasing(format!(
            "intermodulation support exceeds the grid: {:.3e} of the output power \
             lies above f_max",
            lost / (kept + lost)
        )));
    }

    Psd::new(s.grid, full[..n].to_vec(), PsdUnits::FrequencyNoise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::FrequencyGrid;
    use approx::assert_relative_eq;

    fn grid(df: f64, n: usize) -> FrequencyGrid {
        FrequencyGrid::new(0.0, df, n).unwrap()
    }

    /// Gaussian-bump input has a closed-form self-convolution:
    /// S(f) = a·e^{−f²/2w²}  ⇒  S_{ν²}(f) = a²w√π·e^{−f²/4w²}.
    #[test]
    fn gaussian_bump_matches_closed_form() {
        let a = 3.0;
        let w = 20.0;
        let g = grid(0.25, 4096);
        let s = Psd::from_fn(g, PsdUnits::FrequencyNoise, |f| {
            a * (-f * f / (2.0 * w * w)).exp()
        })
        .unwrap();
        let out = self_convolve(&s, 1.0).unwrap();
        for f in [0.0, 5.0, 17.0, 40.0, 80.0] {
            let expected = a * a * w * std::f64::consts::PI.sqrt()
                * (-f * f / (4.0 * w * w)).exp();
            assert_relative_eq!(out.value_at(f).unwrap(), expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn total_output_power_is_twice_variance_squared() {
        let g = grid(0.1, 8192);
        // Two displaced bumps — asymmetric, nothing special about the shape.
        let s = Psd::from_fn(g, PsdUnits::FrequencyNoise, |f| {
            2.0 * (-(f - 80.0) * (f - 80.0) / 50.0).exp()
                + 0.7 * (-(f - 210.0) * (f - 210.0) / 180.0).exp()
        })
        .unwrap();
        let sigma_sq = s.total_power();
        let out = self_convolve(&s, 1.0).unwrap();
        assert_relative_eq!(
            out.total_power(),
            2.0 * sigma_sq * sigma_sq,
            max_relative = 1e-6
        );
    }

    #[test]
    fn correction_scales_linearly() {
        let g = grid(0.25, 2048);
        let s = Psd::from_fn(g, PsdUnits::FrequencyNoise, |f| {
            (-(f - 50.0) * (f - 50.0) / 30.0).exp()
        })
        .unwrap();
        let base = self_convolve(&s, 1.0).unwrap();
        let scaled = self_convolve(&s, 1.3).unwrap();
        assert_relative_eq!(
            scaled.value_at(10.0).unwrap(),
            1.3 * base.value_at(10.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn narrow_lines_produce_sum_and_difference_peaks() {
        let g = grid(0.1, 16384);
        let line = |f: f64, f0: f64| {
            let hw = 0.8;
            1.0 / (1.0 + ((f - f0) / hw).powi(2))
        };
        let s = Psd::from_fn(g, PsdUnits::FrequencyNoise, |f| {
            line(f, 300.0) + line(f, 440.0)
        })
        .unwrap();
        let out = self_convolve(&s, 1.0).unwrap();
        for f0 in [140.0, 600.0, 740.0, 880.0] {
            let (f_peak, v_peak) = out.band_peak(f0 - 15.0, f0 + 15.0).unwrap();
            assert_relative_eq!(f_peak, f0, epsilon = 0.5);
            // Peak stands well above the local floor 30 Hz away.
            let floor = out.value_at(f0 - 30.0).unwrap();
            assert!(v_peak > 5.0 * floor, "no line at {f0} Hz");
        }
    }

    #[test]
    fn rejects_inputs_that_would_alias() {
        // Support near the top of the grid: edge-decay check fires.
        let g = grid(0.5, 1024);
        let s = Psd::from_fn(g, PsdUnits::FrequencyNoise, |f| {
            (-(f - 500.0) * (f - 500.0) / 800.0).exp()
        })
        .unwrap();
        assert!(matches!(self_convolve(&s, 1.0), Err(Error::Aliasing(_))));

        // Decayed at the edge but doubled support exceeds the grid:
        // truncation check fires.
        let s = Psd::from_fn(g, PsdUnits::FrequencyNoise, |f| {
            (-(f - 350.0) * (f - 350.0) / 100.0).exp()
        })
        .unwrap();
        assert!(matches!(self_convolve(&s, 1.0), Err(Error::Aliasing(_))));
    }

    #[test]
    fn rejects_negative_input_and_offset_grids() {
        let g = grid(0.5, 1024);
        let mut s = Psd::from_fn(g, PsdUnits::FrequencyNoise, |f| {
            (-f * f / 200.0).exp()
        })
        .unwrap();
        s.values[10] = -1e-3;
        assert!(matches!(self_convolve(&s, 1.0), Err(Error::NegativeArea(_))));

        let offset = FrequencyGrid::new(10.0, 0.5, 1024).unwrap();
        let s = Psd::from_fn(offset, PsdUnits::FrequencyNoise, |f| {
            (-(f - 20.0) * (f - 20.0) / 4.0).exp()
        })
        .unwrap();
        assert!(self_convolve(&s, 1.0).is_err());
    }
}
