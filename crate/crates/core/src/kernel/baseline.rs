use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineVariant {
    Se,
    Rq,
}

/// Isotropic squared-exponential or rational-quadratic kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineKernelParams<T> {
    pub variant: BaselineVariant,
    pub amplitude: T,
    pub lengthscale: T,
    /// Shape parameter; only read by the RQ variant.
    pub rq_alpha: T,
}

impl<T: Scalar> BaselineKernelParams<T> {
    pub fn se(amplitude: T, lengthscale: T) -> Result<Self> {
        let p = Self {
            variant: BaselineVariant::Se,
            amplitude,
            lengthscale,
            rq_alpha: T::one(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn rq(amplitude: T, lengthscale: T, rq_alpha: T) -> Result<Self> {
        let p = Self {
            variant: BaselineVariant::Rq,
            amplitude,
            lengthscale,
            rq_alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("lengthscale", self.lengthscale),
            ("rq_alpha", self.rq_alpha),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Covariance as a function of the squared lag distance.
    pub fn eval_sq(&self, r2: T) -> T {
        let l2 = self.lengthscale * self.lengthscale;
        match self.variant {
            BaselineVariant::Se => self.amplitude * (-r2 / (T::lit(2.0) * l2)).exp(),
            BaselineVariant::Rq => {
                let base = T::one() + r2 / (T::lit(2.0) * self.rq_alpha * l2);
                self.amplitude * base.powf(-self.rq_alpha)
            }
        }
    }

    /// Transformed-coordinate partials `[ln θ_f, ln ℓ, (ln α)]`.
    pub(crate) fn partials_transformed(&self, r2: T, out: &mut [T]) {
        let k = self.eval_sq(r2);
        let l2 = self.lengthscale * self.lengthscale;
        out[0] = k;
        match self.variant {
            BaselineVariant::Se => out[1] = k * r2 / l2,
            BaselineVariant::Rq => {
                let alpha = self.rq_alpha;
                let base = T::one() + r2 / (T::lit(2.0) * alpha * l2);
                out[1] = k * r2 / (l2 * base);
                out[2] = k * alpha * ((base - T::one()) / base - base.ln());
            }
        }
    }

    pub fn n_slots(&self) -> usize {
        match self.variant {
            BaselineVariant::Se => 2,
            BaselineVariant::Rq => 3,
        }
    }
}

/// Baseline kernel at scalar lag `tau`.
pub fn baseline_kernel<T: Scalar>(tau: T, b: &BaselineKernelParams<T>) -> T {
    b.eval_sq(tau * tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rq_at_zero_is_amplitude() {
        let b = BaselineKernelParams::rq(2.5, 0.7, 3.0).unwrap();
        assert_eq!(baseline_kernel(0.0, &b), 2.5);
    }

    #[test]
    fn rq_approaches_se_for_large_alpha() {
        let rq = BaselineKernelParams::rq(1.0, 1.3, 1e6).unwrap();
        let se = BaselineKernelParams::se(1.0, 1.3).unwrap();
        for i in 0..=500 {
            let t = i as f64 * 0.01;
            let d = (baseline_kernel(t, &rq) - baseline_kernel(t, &se)).abs();
            assert!(d < 1e-4, "tau {t}: {d}");
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(BaselineKernelParams::se(0.0, 1.0).is_err());
        assert!(BaselineKernelParams::rq(1.0, 1.0, -2.0).is_err());
    }
}
