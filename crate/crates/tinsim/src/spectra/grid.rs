//! Uniform frequency grids.
//!
//! Every spectral object in the crate lives on a uniform one-sided grid
//! f_k = f_start + k·df, k = 0..n.  Grids are value types; two spectra may be
//! combined only when their grids agree bin-for-bin.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance used when comparing grid descriptors.
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// Frequency of bin 0 [Hz]
    pub f_start: f64,
    /// Bin spacing [Hz]
    pub df: f64,
    /// Number of bins
    pub n: usize,
}

impl FrequencyGrid {
    pub fn new(f_start: f64, df: f64, n: usize) -> Result<Self> {
        if !(df > 0.0) || !df.is_finite() {
            return Err(Error::InvalidParameter {
                name: "df",
                reason: "must be finite and positive",
                value: df,
            });
        }
        if !(f_start >= 0.0) || !f_start.is_finite() {
            return Err(Error::InvalidParameter {
                name: "f_start",
                reason: "must be finite and non-negative",
                value: f_start,
            });
        }
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "grid needs at least one bin",
                value: 0.0,
            });
        }
        Ok(Self { f_start, df, n })
    }

    /// Grid of a length-`nfft` real FFT at sample rate `fs`: DC through
    /// Nyquist inclusive.
    pub fn from_fft(fs: f64, nfft: usize) -> Result<Self> {
        if nfft < 2 || nfft % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "nfft",
                reason: "must be even and at least 2",
                value: nfft as f64,
            });
        }
        Self::new(0.0, fs / nfft as f64, nfft / 2 + 1)
    }

    /// Frequency of bin `k` [Hz].
    pub fn f(&self, k: usize) -> f64 {
        self.f_start + k as f64 * self.df
    }

    /// Highest frequency on the grid [Hz].
    pub fn f_max(&self) -> f64 {
        self.f(self.n - 1)
    }

    /// All bin frequencies.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.f(k)).collect()
    }

    /// Bin whose center is nearest to `f_hz`, if `f_hz` is on the grid span.
    pub fn index_of(&self, f_hz: f64) -> Result<usize> {
        let k = (f_hz - self.f_start) / self.df;
        let idx = k.round();
        if idx < -0.5 || idx as usize >= self.n {
            return Err(Error::GridMismatch(format!(
                "{f_hz} Hz is outside the grid [{}, {}] Hz",
                self.f_start,
                self.f_max()
            )));
        }
        Ok(idx.max(0.0) as usize)
    }

    /// Inclusive bin range covering [f_lo, f_hi].
    pub fn band(&self, f_lo: f64, f_hi: f64) -> Result<std::ops::RangeInclusive<usize>> {
        if !(f_lo < f_hi) {
            return Err(Error::GridMismatch(format!(
                "empty band [{f_lo}, {f_hi}] Hz"
            )));
        }
        let lo = ((f_lo - self.f_start) / self.df).ceil().max(0.0) as usize;
        let hi_f = ((f_hi - self.f_start) / self.df).floor();
        if hi_f < 0.0 {
            return Err(Error::GridMismatch(format!(
                "band [{f_lo}, {f_hi}] Hz lies below the grid"
            )));
        }
        let hi = (hi_f as usize).min(self.n - 1);
        if lo > hi {
            return Err(Error::GridMismatch(format!(
                "band [{f_lo}, {f_hi}] Hz contains no grid bin (df = {})",
                self.df
            )));
        }
        Ok(lo..=hi)
    }

    /// Bin-for-bin compatibility with another grid.
    pub fn compatible(&self, other: &Self) -> bool {
        let close = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs()).max(1e-300);
            (a - b).abs() <= GRID_EPS * scale
        };
        self.n == other.n && close(self.df, other.df) && close(self.f_start, other.f_start)
    }

    pub fn require_compatible(&self, other: &Self) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grids differ: ({}, {}, {}) vs ({}, {}, {})",
                self.f_start, self.df, self.n, other.f_start, other.df, other.n
            )))
        }
    }
}
