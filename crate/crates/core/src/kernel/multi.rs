//! Multivariate spectral mixture components with diagonal frequency covariance.

use serde::{Deserialize, Serialize};

use super::slsm::{skew_laplace_parts, skew_laplace_value};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSlsmComponent<T> {
    pub weight: T,
    pub freq: Vec<T>,
    /// Diagonal of the component's frequency covariance `Σ_i`.
    pub scale_diag: Vec<T>,
    pub skew: Vec<T>,
}

impl<T: Scalar> MultiSlsmComponent<T> {
    pub fn new(weight: T, freq: Vec<T>, scale_diag: Vec<T>, skew: Vec<T>) -> Result<Self> {
        let c = Self {
            weight,
            freq,
            scale_diag,
            skew,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.freq.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.freq.len();
        if p == 0 {
            return Err(Error::InvalidParameter("component dimension must be >= 1".into()));
        }
        for len in [self.scale_diag.len(), self.skew.len()] {
            if len != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    actual: len,
                });
            }
        }
        let all = std::iter::once(&self.weight)
            .chain(&self.freq)
            .chain(&self.scale_diag)
            .chain(&self.skew);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectral component"));
        }
        if self.weight < T::zero() || self.freq.iter().any(|&m| m < T::zero()) {
            return Err(Error::InvalidParameter(
                "weights and frequencies must be >= 0".into(),
            ));
        }
        if self.scale_diag.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::InvalidParameter(
                "diagonal scales must be > 0".into(),
            ));
        }
        Ok(())
    }

    fn quad(&self, tau: &[T]) -> (T, T, T, T) {
        let mut q = T::zero();
        let mut a = T::zero();
        let mut b = T::zero();
        let mut r2 = T::zero();
        for (p, &t) in tau.iter().enumerate() {
            q = q + self.scale_diag[p] * t * t;
            a = a + self.freq[p] * t;
            b = b + self.skew[p] * t;
            r2 = r2 + t * t;
        }
        (T::lit(0.5) * q, a, b, r2.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSlsmParams<T> {
    pub components: Vec<MultiSlsmComponent<T>>,
    pub noise_var: T,
}

impl<T: Scalar> MultiSlsmParams<T> {
    pub fn new(components: Vec<MultiSlsmComponent<T>>, noise_var: T) -> Result<Self> {
        let p = Self {
            components,
            noise_var,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.components.first().ok_or_else(|| {
            Error::InvalidParameter("a spectral mixture needs at least one component".into())
        })?;
        let dim = first.dim();
        for c in &self.components {
            c.validate()?;
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.dim(),
                });
            }
        }
        if !(self.noise_var >= T::zero()) || !self.noise_var.is_finite() {
            return Err(Error::InvalidParameter(
                "noise variance must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.dim())
    }
}

fn check_dim<T: Scalar>(tau: &[T], c: &MultiSlsmComponent<T>) -> Result<()> {
    if tau.len() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            actual: tau.len(),
        });
    }
    Ok(())
}

/// Unit-weight multivariate SLSM component:
/// `(C cos τᵀμ − τᵀγ sin τᵀμ) / (C² + (τᵀγ)²)`, `C = 1 + τᵀΣτ/2`.
pub fn slsm_kernel_multi<T: Scalar>(tau: &[T], c: &MultiSlsmComponent<T>) -> Result<T> {
    check_dim(tau, c)?;
    Ok(slsm_multi_unchecked(tau, c))
}

#[inline]
pub(crate) fn slsm_multi_unchecked<T: Scalar>(tau: &[T], c: &MultiSlsmComponent<T>) -> T {
    let (q, a, b, r) = c.quad(tau);
    skew_laplace_value(q, a, b, r)
}

/// Unit-weight multivariate SM component `cos(τᵀμ) exp(−τᵀΣτ/2)`.
pub fn sm_kernel_multi<T: Scalar>(tau: &[T], c: &MultiSlsmComponent<T>) -> Result<T> {
    check_dim(tau, c)?;
    Ok(sm_multi_unchecked(tau, c))
}

#[inline]
pub(crate) fn sm_multi_unchecked<T: Scalar>(tau: &[T], c: &MultiSlsmComponent<T>) -> T {
    let (q, a, _, _) = c.quad(tau);
    a.cos() * (-q).exp()
}

/// Writes transformed-coordinate partials of `w·k(τ)` into `out`:
/// `[ln w, ln μ_1..P, ln Σ_1..P, γ_1..P]` (γ slots omitted when `with_skew` is false).
pub(crate) fn multi_partials_transformed<T: Scalar>(
    tau: &[T],
    c: &MultiSlsmComponent<T>,
    gaussian: bool,
    with_skew: bool,
    out: &mut [T],
) {
    let p = c.dim();
    let (q, a, b, _) = c.quad(tau);
    let half = T::lit(0.5);
    let (value, d_c, d_a, d_b) = if gaussian {
        let env = (-q).exp();
        let (sin, cos) = a.sin_cos();
        (cos * env, -cos * env, -sin * env, T::zero())
    } else {
        let parts = skew_laplace_parts(T::one() + q, a, b);
        (parts.value, parts.d_c, parts.d_a, parts.d_b)
    };
    let w = c.weight;
    out[0] = w * value;
    for d in 0..p {
        let t = tau[d];
        out[1 + d] = w * d_a * t * c.freq[d];
        // For the Gaussian envelope, ∂k/∂q plays the role of ∂k/∂C.
        out[1 + p + d] = w * d_c * half * t * t * c.scale_diag[d];
        if with_skew {
            out[1 + 2 * p + d] = w * d_b * t;
        }
    }
}
