use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the window (per side) treated as the boundary region when
/// measuring tail mass.
pub const TAIL_FRACTION: f64 = 0.1;

/// Centered uniform sampling of a periodic time window.
///
/// Sample `k` sits at `t_k = (k - n/2) * dt` with `dt = t_span / n`. The dual
/// frequency grid has spacing `1 / t_span` and covers
/// `[-n / (2 t_span), n / (2 t_span))`; bin `a` of an FFT corresponds to the
/// frequency returned by [`TimeGrid::frequency`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n_samples: usize,
    t_span: f64,
}

impl TimeGrid {
    pub const DEFAULT_SAMPLES: usize = 256;
    pub const DEFAULT_SPAN: f64 = 16.0;

    pub fn new(n_samples: usize, t_span: f64) -> Result<Self> {
        if n_samples < 2 || !n_samples.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_samples must be an even power of two, got {n_samples}"
            )));
        }
        if !(t_span.is_finite() && t_span > 0.0) {
            return Err(Error::InvalidGrid(format!("t_span must be positive, got {t_span}")));
        }
        Ok(Self { n_samples, t_span })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn t_span(&self) -> f64 {
        self.t_span
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.t_span / self.n_samples as f64
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        (k as f64 - (self.n_samples / 2) as f64) * self.dt()
    }

    pub fn sample_points(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.t(k)).collect()
    }

    /// Frequency of FFT bin `a`; the Nyquist bin maps to the negative edge.
    #[inline]
    pub fn frequency(&self, a: usize) -> f64 {
        let n = self.n_samples;
        let idx = if a < n / 2 { a as f64 } else { a as f64 - n as f64 };
        idx / self.t_span
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_samples).map(|a| self.frequency(a)).collect()
    }

    /// Total extent of the dual frequency grid, `n / t_span`.
    #[inline]
    pub fn bandwidth(&self) -> f64 {
        self.n_samples as f64 / self.t_span
    }

    /// Largest admissible |tau| for a time-frequency shift.
    #[inline]
    pub fn tau_guard(&self) -> f64 {
        self.t_span / 4.0
    }

    /// Largest admissible |nu| for a time-frequency shift.
    #[inline]
    pub fn nu_guard(&self) -> f64 {
        self.bandwidth() / 4.0
    }

    pub fn in_guard(&self, tau: f64, nu: f64) -> bool {
        tau.abs() < self.tau_guard() && nu.abs() < self.nu_guard()
    }

    pub fn check_guard(&self, tau: f64, nu: f64) -> Result<()> {
        if self.in_guard(tau, nu) {
            Ok(())
        } else {
            Err(Error::OutOfGuard {
                tau,
                nu,
                tau_guard: self.tau_guard(),
                nu_guard: self.nu_guard(),
            })
        }
    }

    /// Number of samples on each side counted as boundary region.
    pub(crate) fn tail_width(&self) -> usize {
        ((self.n_samples as f64 * TAIL_FRACTION).round() as usize).max(1)
    }

    pub fn describe(&self) -> String {
        format!("n_samples={}, t_span={}", self.n_samples, self.t_span)
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            n_samples: Self::DEFAULT_SAMPLES,
            t_span: Self::DEFAULT_SPAN,
        }
    }
}
