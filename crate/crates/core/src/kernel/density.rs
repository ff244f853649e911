//! Spectral densities (angular frequency) of the mixture components.

use super::slsm::{SlsmComponent, SlsmParams};
use crate::scalar::Scalar;

/// Asymmetric Laplace density with location `μ`, scale `σ` and skewness `γ`.
pub fn skewed_laplace_density<T: Scalar>(s: T, c: &SlsmComponent<T>) -> T {
    let sqrt2 = T::lit(2.0).sqrt();
    let kappa = c.kappa();
    let norm = sqrt2 / c.scale * kappa / (T::one() + kappa * kappa);
    if s < c.freq {
        norm * (-sqrt2 / (c.scale * kappa) * (c.freq - s)).exp()
    } else {
        norm * (-sqrt2 * kappa / c.scale * (s - c.freq)).exp()
    }
}

/// Symmetrized SLSM component density `½(φ(s) + φ(−s))`.
pub fn spectral_density<T: Scalar>(s: T, c: &SlsmComponent<T>) -> T {
    T::lit(0.5) * (skewed_laplace_density(s, c) + skewed_laplace_density(-s, c))
}

/// Symmetrized Gaussian density of an SM component (skewness ignored).
pub fn sm_spectral_density<T: Scalar>(s: T, c: &SlsmComponent<T>) -> T {
    let norm = T::one() / (c.scale * (T::lit(2.0) * T::PI()).sqrt());
    let g = |x: T| {
        let z = (x - c.freq) / c.scale;
        norm * (-T::lit(0.5) * z * z).exp()
    };
    T::lit(0.5) * (g(s) + g(-s))
}

/// Weighted mixture density `Σ w_i k̂_i(s)`; `gaussian` selects the SM form.
pub fn mixture_density<T: Scalar>(s: T, p: &SlsmParams<T>, gaussian: bool) -> T {
    p.components
        .iter()
        .map(|c| {
            let d = if gaussian {
                sm_spectral_density(s, c)
            } else {
                spectral_density(s, c)
            };
            c.weight * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_laplace_peak() {
        let c = SlsmComponent::new(1.0, 0.0, 2f64.sqrt(), 0.0).unwrap();
        assert!((spectral_density(0.0, &c) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn even_and_nonnegative() {
        let c = SlsmComponent::new(1.0, 1.2, 0.4, 0.7).unwrap();
        for i in 0..200 {
            let s = i as f64 * 0.05;
            let a = spectral_density(s, &c);
            assert!(a >= 0.0);
            assert_eq!(a, spectral_density(-s, &c));
        }
    }
}
