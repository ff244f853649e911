use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::UNIFORM_GAP_TOL;
use crate::scalar::Scalar;

/// Empirical one-sided spectral density on the positive angular-frequency bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate<T> {
    pub freqs: Vec<T>,
    pub powers: Vec<T>,
    pub delta_t: T,
}

impl<T: Scalar> SpectrumEstimate<T> {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Spacing of the frequency grid, `2π / (nΔt)`.
    pub fn bin_width(&self) -> T {
        if self.freqs.len() >= 2 {
            self.freqs[1] - self.freqs[0]
        } else {
            self.freqs.first().copied().unwrap_or_else(T::zero)
        }
    }

    pub fn total_power(&self) -> T {
        self.powers.iter().copied().sum()
    }

    pub fn argmax(&self) -> Option<usize> {
        self.powers
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
    }
}

/// Raw (untapered) periodogram of a uniformly sampled series.
///
/// The mean is removed and `P_k = Δt / (π n) · |FFT(y)_k|²` is returned at
/// `ω_k = 2πk / (nΔt)` for `k = 1..=n/2`, so that `Σ P_k Δω` approximates the
/// sample variance.
pub fn periodogram<T: Scalar>(series: &[T], delta_t: T) -> Result<SpectrumEstimate<T>> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InvalidData(format!(
            "periodogram needs at least 4 samples, got {n}"
        )));
    }
    if !(delta_t > T::zero()) || !delta_t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sampling interval must be > 0, got {delta_t}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series"));
    }
    let nt = T::from_usize_lossy(n);
    let mean = series.iter().copied().sum::<T>() / nt;
    let mut buf: Vec<Complex<T>> = series
        .iter()
        .map(|&v| Complex::new(v - mean, T::zero()))
        .collect();
    let mut planner = FftPlanner::<T>::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let scale = delta_t / (T::PI() * nt);
    let dw = T::lit(2.0) * T::PI() / (nt * delta_t);
    let half = n / 2;
    let freqs = (1..=half).map(|k| T::from_usize_lossy(k) * dw).collect();
    let powers = (1..=half).map(|k| buf[k].norm_sqr() * scale).collect();
    Ok(SpectrumEstimate {
        freqs,
        powers,
        delta_t,
    })
}

/// Periodogram of `(t, y)` after verifying that `t` is a uniform grid.
pub fn periodogram_from_times<T: Scalar>(t: &[T], y: &[T]) -> Result<SpectrumEstimate<T>> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            actual: y.len(),
        });
    }
    if t.len() < 4 {
        return Err(Error::InvalidData("periodogram needs at least 4 samples".into()));
    }
    let gaps: Vec<T> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let lo = gaps.iter().copied().fold(T::infinity(), T::min);
    let hi = gaps.iter().copied().fold(T::neg_infinity(), T::max);
    let mean = (t[t.len() - 1] - t[0]) / T::from_usize_lossy(gaps.len());
    let ratio = ((hi - lo) / mean).to_f64_lossy();
    if !(lo > T::zero()) || !(ratio <= UNIFORM_GAP_TOL) {
        return Err(Error::NonUniformSampling { ratio });
    }
    periodogram(y, mean)
}
