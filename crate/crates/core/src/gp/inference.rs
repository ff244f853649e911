//! Negative log marginal likelihood and its gradient.

use rayon::prelude::*;

use super::dataset::Dataset;
use crate::error::Result;
use crate::kernel::{gram_symmetric, KernelSpec};
use crate::linalg::{cholesky_with_jitter, Cholesky, Matrix};
use crate::scalar::Scalar;

/// Cached factorization of `K + σ_n² I (+ jitter I)` and `α = (…)⁻¹ y`.
#[derive(Debug, Clone)]
pub struct Factorization<T> {
    pub chol: Cholesky<T>,
    pub alpha: Vec<T>,
    pub jitter: T,
}

pub fn factorize<T: Scalar>(
    kernel: &KernelSpec<T>,
    x: &Matrix<T>,
    y: &[T],
) -> Result<Factorization<T>> {
    let mut k = gram_symmetric(x, kernel)?;
    k.add_diagonal(kernel.noise_var());
    let (chol, jitter) = cholesky_with_jitter(&k)?;
    let alpha = chol.solve(y);
    Ok(Factorization {
        chol,
        alpha,
        jitter,
    })
}

/// The two data-dependent pieces of the NLML and the normalizing constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmlTerms<T> {
    /// `½ yᵀ K̃⁻¹ y`
    pub data_fit: T,
    /// `½ log |K̃|`
    pub complexity: T,
    /// `(n/2) log 2π`
    pub constant: T,
}

impl<T: Scalar> NlmlTerms<T> {
    pub fn total(&self) -> T {
        self.data_fit + self.complexity + self.constant
    }

    pub fn total_without_constant(&self) -> T {
        self.data_fit + self.complexity
    }

    fn from_factorization(f: &Factorization<T>, y: &[T]) -> Self {
        let half = T::lit(0.5);
        let n = T::from_usize_lossy(y.len());
        Self {
            data_fit: half * y.iter().zip(&f.alpha).map(|(&a, &b)| a * b).sum::<T>(),
            complexity: half * f.chol.log_det(),
            constant: half * n * (T::lit(2.0) * T::PI()).ln(),
        }
    }
}

pub fn nlml_terms<T: Scalar>(kernel: &KernelSpec<T>, data: &Dataset<T>) -> Result<NlmlTerms<T>> {
    let f = factorize(kernel, &data.x, &data.y)?;
    Ok(NlmlTerms::from_factorization(&f, &data.y))
}

/// `½yᵀK̃⁻¹y + ½log|K̃| + (n/2)log 2π` with `K̃ = K + σ_n² I`.
pub fn nlml<T: Scalar>(kernel: &KernelSpec<T>, data: &Dataset<T>) -> Result<T> {
    Ok(nlml_terms(kernel, data)?.total())
}

/// NLML and its gradient with respect to the transformed parameters of `kernel`
/// (kernel slots first, `ln σ_n²` last).
pub fn nlml_grad<T: Scalar>(kernel: &KernelSpec<T>, data: &Dataset<T>) -> Result<(T, Vec<T>)> {
    nlml_grad_xy(kernel, &data.x, &data.y)
}

pub(crate) fn nlml_grad_xy<T: Scalar>(
    kernel: &KernelSpec<T>,
    x: &Matrix<T>,
    y: &[T],
) -> Result<(T, Vec<T>)> {
    kernel.check_dim(x.cols())?;
    let f = factorize(kernel, x, y)?;
    let value = NlmlTerms::from_factorization(&f, y).total();
    let n = x.rows();
    let p = x.cols();
    let nk = kernel.n_kernel_slots();

    // W = K̃⁻¹ − ααᵀ; ∂NLML/∂θ = ½ Σ_ij W_ij ∂K_ij/∂θ.
    let mut w = f.chol.inverse();
    for i in 0..n {
        let ai = f.alpha[i];
        let row = w.row_mut(i);
        for (r, &aj) in row.iter_mut().zip(&f.alpha) {
            *r = *r - ai * aj;
        }
    }

    let row_grad = |i: usize| -> Vec<T> {
        let mut acc = vec![T::zero(); nk];
        let mut g = vec![T::zero(); nk];
        let mut lag = vec![T::zero(); p];
        let xi = x.row(i);
        let wi = w.row(i);
        let two = T::lit(2.0);
        for j in 0..=i {
            for (d, l) in lag.iter_mut().enumerate() {
                *l = xi[d] - x[(j, d)];
            }
            kernel.grad_transformed(&lag, &mut g);
            let c = if i == j { wi[j] } else { two * wi[j] };
            for (a, &gv) in acc.iter_mut().zip(&g) {
                *a = *a + c * gv;
            }
        }
        acc
    };
    let rows: Vec<Vec<T>> = if n >= 64 {
        (0..n).into_par_iter().map(row_grad).collect()
    } else {
        (0..n).map(row_grad).collect()
    };
    let half = T::lit(0.5);
    let mut grad = vec![T::zero(); nk + 1];
    for r in &rows {
        for (g, &v) in grad.iter_mut().zip(r) {
            *g = *g + v;
        }
    }
    for g in grad.iter_mut().take(nk) {
        *g = *g * half;
    }
    grad[nk] = half * kernel.noise_var() * w.trace();
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelKind, SlsmComponent, SlsmParams};

    fn unit_kernel(noise: f64) -> KernelSpec<f64> {
        KernelSpec::mixture(
            KernelKind::Slsm,
            SlsmParams {
                components: vec![SlsmComponent {
                    weight: 1.0,
                    freq: 0.3,
                    scale: 1.0,
                    skew: 0.0,
                }],
                noise_var: noise,
            },
        )
        .unwrap()
    }

    #[test]
    fn single_point_constant_only() {
        let d = Dataset::regular(vec![0.0], 1.0).unwrap();
        let v = nlml(&unit_kernel(0.0), &d).unwrap();
        assert!((v - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert!((v - 0.91894).abs() < 1e-5);
    }

    #[test]
    fn single_point_unit_target() {
        let d = Dataset::regular(vec![1.0], 1.0).unwrap();
        let v = nlml(&unit_kernel(0.0), &d).unwrap();
        assert!((v - 1.41894).abs() < 1e-5);
    }

    #[test]
    fn terms_sum_to_total() {
        let d = Dataset::regular(vec![0.3, -1.0, 0.8, 0.1], 1.0).unwrap();
        let t = nlml_terms(&unit_kernel(0.1), &d).unwrap();
        assert_eq!(t.total(), t.data_fit + t.complexity + t.constant);
        assert_eq!(t.total_without_constant(), t.data_fit + t.complexity);
    }

    #[test]
    fn duplicate_components_get_identical_gradients() {
        let c = SlsmComponent {
            weight: 0.5,
            freq: 0.7,
            scale: 0.4,
            skew: 0.2,
        };
        let k = KernelSpec::mixture(
            KernelKind::Slsm,
            SlsmParams {
                components: vec![c, c],
                noise_var: 0.1,
            },
        )
        .unwrap();
        let y: Vec<f64> = (0..20).map(|i| (i as f64 * 0.6).sin()).collect();
        let d = Dataset::regular(y, 1.0).unwrap();
        let (_, g) = nlml_grad(&k, &d).unwrap();
        assert_eq!(&g[0..4], &g[4..8]);
    }
}
