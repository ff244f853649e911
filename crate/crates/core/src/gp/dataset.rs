use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Relative spread of consecutive gaps tolerated for a grid to count as uniform.
pub const UNIFORM_GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling<T> {
    /// Mean spacing of a univariate, strictly increasing input.
    pub delta_t: Option<T>,
    pub uniform: bool,
    /// `(max gap − min gap) / mean gap`; zero for a perfect grid.
    pub gap_ratio: f64,
}

/// Observed inputs `X` (n×P) and targets `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub y: Vec<T>,
    pub names: Option<Vec<String>>,
    pub sampling: Sampling<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Vec<T>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidData("dataset has no rows".into()));
        }
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                actual: y.len(),
            });
        }
        if x.cols() == 0 {
            return Err(Error::InvalidData("dataset has no input columns".into()));
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        let sampling = detect_sampling(&x);
        Ok(Self {
            x,
            y,
            names: None,
            sampling,
        })
    }

    /// Univariate series with explicit times.
    pub fn from_series(t: &[T], y: Vec<T>) -> Result<Self> {
        Self::new(Matrix::column(t), y)
    }

    /// Regularly sampled series `t_i = i·Δt`.
    pub fn regular(y: Vec<T>, delta_t: T) -> Result<Self> {
        let t: Vec<T> = (0..y.len())
            .map(|i| T::from_usize_lossy(i) * delta_t)
            .collect();
        Self::from_series(&t, y)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.names = Some(names);
        self
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn is_univariate(&self) -> bool {
        self.dim() == 1
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(indices);
        let y = indices.iter().map(|&i| self.y[i]).collect();
        let mut d = Self::new(x, y)?;
        d.names = self.names.clone();
        Ok(d)
    }

    /// First `n_train` rows and the remainder, in order.
    pub fn split_at(&self, n_train: usize) -> Result<(Self, Self)> {
        if n_train == 0 || n_train >= self.n() {
            return Err(Error::InvalidParameter(format!(
                "cannot split {} rows with {n_train} training rows",
                self.n()
            )));
        }
        let train: Vec<usize> = (0..n_train).collect();
        let test: Vec<usize> = (n_train..self.n()).collect();
        Ok((self.subset(&train)?, self.subset(&test)?))
    }

    pub fn y_mean(&self) -> T {
        self.y.iter().copied().sum::<T>() / T::from_usize_lossy(self.n())
    }

    /// Population variance of the targets.
    pub fn y_var(&self) -> T {
        population_var(&self.y)
    }

    /// Stable hex digest of inputs and targets.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        for v in self.x.as_slice().iter().chain(&self.y) {
            h.update(v.to_f64_lossy().to_le_bytes());
        }
        h.finalize()[..16]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub(crate) fn population_var<T: Scalar>(v: &[T]) -> T {
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    v.iter().map(|&a| (a - mean) * (a - mean)).sum::<T>() / n
}

fn detect_sampling<T: Scalar>(x: &Matrix<T>) -> Sampling<T> {
    let not_uniform = Sampling {
        delta_t: None,
        uniform: false,
        gap_ratio: f64::INFINITY,
    };
    if x.cols() != 1 || x.rows() < 2 {
        return not_uniform;
    }
    let t = x.as_slice();
    let gaps: Vec<T> = t.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.iter().any(|&g| !(g > T::zero())) {
        return not_uniform;
    }
    let (lo, hi) = gaps
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &g| (a.min(g), b.max(g)));
    let mean = (t[t.len() - 1] - t[0]) / T::from_usize_lossy(gaps.len());
    let ratio = ((hi - lo) / mean).to_f64_lossy();
    Sampling {
        delta_t: Some(mean),
        uniform: ratio <= UNIFORM_GAP_TOL,
        gap_ratio: ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_series_is_uniform() {
        let d = Dataset::regular(vec![1.0, 2.0, 4.0, 3.0], 0.5).unwrap();
        assert!(d.sampling.uniform);
        assert_eq!(d.sampling.delta_t, Some(0.5));
    }

    #[test]
    fn irregular_series_is_flagged() {
        let d = Dataset::from_series(&[0.0, 1.0, 2.5, 3.0], vec![0.0; 4]).unwrap();
        assert!(!d.sampling.uniform);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Dataset::<f64>::regular(vec![], 1.0).is_err());
        assert!(Dataset::from_series(&[0.0, 1.0], vec![1.0]).is_err());
        assert!(Dataset::from_series(&[0.0, 1.0], vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn split_is_chronological() {
        let d = Dataset::regular((0..10).map(|v| v as f64).collect(), 1.0).unwrap();
        let (a, b) = d.split_at(6).unwrap();
        assert_eq!(a.n(), 6);
        assert_eq!(b.n(), 4);
        assert!(a.x[(5, 0)] < b.x[(0, 0)]);
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = Dataset::regular(vec![1.0, 2.0, 3.0], 1.0).unwrap();
        let b = Dataset::regular(vec![1.0, 2.0, 3.0 + 1e-12], 1.0).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 32);
    }
}
