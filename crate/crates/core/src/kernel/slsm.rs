//! Univariate skewed Laplace spectral mixture (SLSM) kernel and its Gaussian (SM)
//! and symmetric Laplace (LKP) relatives. All frequencies are angular
//! (radians per input unit).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest representable frequency; a component meant to sit at zero frequency uses this.
pub const MIN_FREQ: f64 = 1e-8;

/// Lags beyond this magnitude are evaluated in the rescaled form.
pub(crate) const LARGE_LAG: f64 = 1e4;

/// One skewed Laplace component: weight `w`, location `mu`, scale `sigma`, skewness `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlsmComponent<T> {
    pub weight: T,
    pub freq: T,
    pub scale: T,
    pub skew: T,
}

impl<T: Scalar> SlsmComponent<T> {
    pub fn new(weight: T, freq: T, scale: T, skew: T) -> Result<Self> {
        let c = Self {
            weight,
            freq,
            scale,
            skew,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight.is_finite()
            && self.freq.is_finite()
            && self.scale.is_finite()
            && self.skew.is_finite())
        {
            return Err(Error::NonFinite("spectral component"));
        }
        if self.weight < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "component weight must be >= 0, got {}",
                self.weight
            )));
        }
        if self.freq < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "component frequency must be >= 0, got {}",
                self.freq
            )));
        }
        if !(self.scale > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "component scale must be > 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// Asymmetry `κ = √2σ / (γ + √(2σ² + γ²))`, evaluated without cancellation for γ < 0.
    pub fn kappa(&self) -> T {
        if self.skew == T::zero() {
            return T::one();
        }
        let two = T::lit(2.0);
        let root = (two * self.scale * self.scale + self.skew * self.skew).sqrt();
        let s2 = two.sqrt() * self.scale;
        if self.skew >= T::zero() {
            s2 / (self.skew + root)
        } else {
            (root - self.skew) / s2
        }
    }

    /// Unit-weight covariance at lag `tau`.
    pub fn covariance(&self, tau: T) -> T {
        slsm_component(tau, self)
    }
}

/// Full SLSM hyper-parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlsmParams<T> {
    pub components: Vec<SlsmComponent<T>>,
    pub noise_var: T,
}

impl<T: Scalar> SlsmParams<T> {
    pub fn new(components: Vec<SlsmComponent<T>>, noise_var: T) -> Result<Self> {
        let p = Self {
            components,
            noise_var,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter(
                "a spectral mixture needs at least one component".into(),
            ));
        }
        for c in &self.components {
            c.validate()?;
        }
        if !(self.noise_var >= T::zero()) || !self.noise_var.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be finite and >= 0, got {}",
                self.noise_var
            )));
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.components.len()
    }

    /// Signal variance `Σ w_i`.
    pub fn total_weight(&self) -> T {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Same parameters with every skewness set to zero.
    pub fn without_skew(&self) -> Self {
        let mut p = self.clone();
        for c in &mut p.components {
            c.skew = T::zero();
        }
        p
    }
}

/// Value and partials of `(C cos a − b sin a) / (C² + b²)` with respect to `C`, `a`, `b`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SkewParts<T> {
    pub value: T,
    pub d_c: T,
    pub d_a: T,
    pub d_b: T,
}

#[inline]
pub(crate) fn skew_laplace_parts<T: Scalar>(c: T, a: T, b: T) -> SkewParts<T> {
    let (sin, cos) = a.sin_cos();
    let num = c * cos - b * sin;
    let den = c * c + b * b;
    let value = num / den;
    let two = T::lit(2.0);
    SkewParts {
        value,
        d_c: (cos - two * c * value) / den,
        d_a: (-c * sin - b * cos) / den,
        d_b: (-sin - two * b * value) / den,
    }
}

/// `(C cos a − b sin a) / (C² + b²)` where `C = 1 + q`, with `r` the lag magnitude.
/// Above [`LARGE_LAG`] numerator and denominator are divided through by powers of `r`.
#[inline]
pub(crate) fn skew_laplace_value<T: Scalar>(q: T, a: T, b: T, r: T) -> T {
    let (sin, cos) = a.sin_cos();
    if r > T::lit(LARGE_LAG) {
        let u = T::one() / (r * r);
        let c_s = u + q * u;
        let b_s = b / r;
        let inv_r = T::one() / r;
        (c_s * cos - b_s * inv_r * sin) / (c_s * c_s + b_s * b_s * u) * u
    } else {
        let c = T::one() + q;
        (c * cos - b * sin) / (c * c + b * b)
    }
}

/// Unit-weight SLSM component at lag `tau`:
/// `(C cos μτ − γτ sin μτ) / (C² + γ²τ²)`, `C = 1 + σ²τ²/2`.
pub fn slsm_component<T: Scalar>(tau: T, c: &SlsmComponent<T>) -> T {
    let t = tau.abs();
    let q = T::lit(0.5) * c.scale * c.scale * t * t;
    skew_laplace_value(q, c.freq * t, c.skew * t, t)
}

/// Weighted mixture `Σ w_i k_i(τ)`.
pub fn slsm_kernel<T: Scalar>(tau: T, p: &SlsmParams<T>) -> T {
    p.components
        .iter()
        .map(|c| c.weight * slsm_component(tau, c))
        .sum()
}

/// Laplace mixture kernel: the SLSM mixture with every skewness forced to zero.
pub fn lkp_kernel<T: Scalar>(tau: T, p: &SlsmParams<T>) -> T {
    slsm_kernel(tau, &p.without_skew())
}

/// Unit-weight Gaussian spectral mixture component `cos(μτ) exp(−σ²τ²/2)`.
pub fn sm_component<T: Scalar>(tau: T, c: &SlsmComponent<T>) -> T {
    let q = T::lit(0.5) * c.scale * c.scale * tau * tau;
    (c.freq * tau).cos() * (-q).exp()
}

/// Gaussian spectral mixture; skewness is ignored.
pub fn sm_kernel<T: Scalar>(tau: T, p: &SlsmParams<T>) -> T {
    p.components
        .iter()
        .map(|c| c.weight * sm_component(tau, c))
        .sum()
}

/// Partial derivatives of the weighted mixture with respect to one component's
/// natural parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentPartials<T> {
    pub d_weight: T,
    pub d_freq: T,
    pub d_scale: T,
    pub d_skew: T,
}

/// Analytic partials of `slsm_kernel(τ, p)` for every component, in natural coordinates.
pub fn slsm_kernel_grad<T: Scalar>(tau: T, p: &SlsmParams<T>) -> Vec<ComponentPartials<T>> {
    p.components
        .iter()
        .map(|c| slsm_component_partials(tau, c))
        .collect()
}

pub(crate) fn slsm_component_partials<T: Scalar>(
    tau: T,
    c: &SlsmComponent<T>,
) -> ComponentPartials<T> {
    let half = T::lit(0.5);
    let cc = T::one() + half * c.scale * c.scale * tau * tau;
    let parts = skew_laplace_parts(cc, c.freq * tau, c.skew * tau);
    ComponentPartials {
        d_weight: parts.value,
        d_freq: c.weight * parts.d_a * tau,
        d_scale: c.weight * parts.d_c * c.scale * tau * tau,
        d_skew: c.weight * parts.d_b * tau,
    }
}

/// Partials of the weighted SM mixture; `d_skew` is always zero.
pub fn sm_kernel_grad<T: Scalar>(tau: T, p: &SlsmParams<T>) -> Vec<ComponentPartials<T>> {
    p.components
        .iter()
        .map(|c| {
            let env = (-T::lit(0.5) * c.scale * c.scale * tau * tau).exp();
            let (sin, cos) = (c.freq * tau).sin_cos();
            ComponentPartials {
                d_weight: cos * env,
                d_freq: -c.weight * sin * tau * env,
                d_scale: -c.weight * cos * env * c.scale * tau * tau,
                d_skew: T::zero(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comp(w: f64, mu: f64, sigma: f64, gamma: f64) -> SlsmComponent<f64> {
        SlsmComponent::new(w, mu, sigma, gamma).unwrap()
    }

    #[test]
    fn unit_at_zero_lag() {
        for &(mu, s, g) in &[(0.0, 1.0, 0.0), (2.0, 0.3, -0.8), (10.0, 5.0, 3.0)] {
            assert_eq!(slsm_component(0.0, &comp(1.0, mu, s, g)), 1.0);
        }
    }

    #[test]
    fn mixture_at_zero_lag_sums_weights() {
        let p = SlsmParams::new(
            vec![
                comp(1.0, 0.1, 1.0, 0.2),
                comp(2.0, 0.5, 0.3, -0.4),
                comp(3.0, 2.0, 2.0, 0.9),
            ],
            0.0,
        )
        .unwrap();
        assert_eq!(slsm_kernel(0.0, &p), 6.0);
    }

    #[test]
    fn cauchy_form() {
        let p = SlsmParams::new(vec![comp(1.0, 0.0, 2f64.sqrt(), 0.0)], 0.0).unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.37 - 9.0;
            let want = 1.0 / (1.0 + t * t);
            assert!((slsm_kernel(t, &p) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn lkp_value() {
        let p = SlsmParams::new(vec![comp(1.0, 1.0, 1.0, 0.0)], 0.0).unwrap();
        let v = lkp_kernel(1.0, &p);
        assert!((v - 1f64.cos() / 1.5).abs() < 1e-15);
        assert!((v - 0.36012).abs() < 1e-4);
    }

    #[test]
    fn kappa_one_without_skew_and_positive_otherwise() {
        assert_eq!(comp(1.0, 0.0, 0.7, 0.0).kappa(), 1.0);
        for &g in &[-1e6, -3.0, -1e-9, 1e-9, 4.0, 1e6] {
            let k = comp(1.0, 0.0, 0.7, g).kappa();
            assert!(k.is_finite() && k > 0.0, "gamma {g} gave kappa {k}");
        }
        // Both branches agree where they overlap.
        let c = comp(1.0, 0.0, 1.3, -0.4);
        let direct = 2f64.sqrt() * 1.3 / (-0.4 + (2.0 * 1.69 + 0.16f64).sqrt());
        assert!((c.kappa() - direct).abs() < 1e-14);
    }

    #[test]
    fn invalid_components_rejected() {
        assert!(SlsmComponent::new(-1.0, 0.0, 1.0, 0.0).is_err());
        assert!(SlsmComponent::new(1.0, -0.1, 1.0, 0.0).is_err());
        assert!(SlsmComponent::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SlsmComponent::new(1.0, f64::NAN, 1.0, 0.0).is_err());
        assert!(SlsmParams::<f64>::new(vec![], 0.1).is_err());
    }

    #[test]
    fn large_lag_rearrangement_matches_direct_formula() {
        let c = comp(1.0, 0.3, 0.5, 0.7);
        let t: f64 = 2.5e4;
        let cc = 1.0 + 0.5 * 0.25 * t * t;
        let (s, co) = (0.3 * t).sin_cos();
        let direct = (cc * co - 0.7 * t * s) / (cc * cc + 0.49 * t * t);
        let v = slsm_component(t, &c);
        assert!((v - direct).abs() <= 1e-12 * direct.abs());
        let far = slsm_component(1e150, &c);
        assert!(far.is_finite() && far.abs() < 1e-290);
    }

    #[test]
    fn f32_evaluation_tracks_f64() {
        let c64 = comp(1.0, 0.8, 0.6, -0.3);
        let c32 = SlsmComponent::<f32>::new(1.0, 0.8, 0.6, -0.3).unwrap();
        for i in 0..40 {
            let t = i as f64 * 0.25;
            let d = slsm_component(t as f32, &c32) as f64 - slsm_component(t, &c64);
            assert!(d.abs() < 1e-5);
        }
    }

    #[test]
    fn sm_is_se_envelope_at_zero_freq() {
        let p = SlsmParams::new(vec![comp(2.5, 0.0, 0.8, 0.4)], 0.0).unwrap();
        for i in 0..20 {
            let t = i as f64 * 0.3;
            let want = 2.5 * (-0.5 * 0.64 * t * t).exp();
            assert!((sm_kernel(t, &p) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn weight_partial_at_zero_lag_is_one() {
        let p = SlsmParams::new(vec![comp(3.0, 0.4, 0.9, 0.0)], 0.0).unwrap();
        let g = slsm_kernel_grad(0.0, &p);
        assert_eq!(g[0].d_weight, 1.0);
        assert_eq!(g[0].d_skew, 0.0);
    }
}
