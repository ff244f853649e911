use rayon::prelude::*;

use super::spec::KernelSpec;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Rows below this count are built sequentially.
const PAR_ROWS: usize = 64;

/// Cross-covariance `K[i][j] = k(x_i − x2_j)`; observation noise is not added.
pub fn gram<T: Scalar>(x: &Matrix<T>, x2: &Matrix<T>, kernel: &KernelSpec<T>) -> Result<Matrix<T>> {
    if x.cols() != x2.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            actual: x2.cols(),
        });
    }
    kernel.check_dim(x.cols())?;
    if !x.is_finite() || !x2.is_finite() {
        return Err(Error::NonFinite("kernel inputs"));
    }
    let (n, m, p) = (x.rows(), x2.rows(), x.cols());
    let row = |i: usize| {
        let xi = x.row(i);
        let mut lag = vec![T::zero(); p];
        (0..m)
            .map(|j| {
                for (d, l) in lag.iter_mut().enumerate() {
                    *l = xi[d] - x2[(j, d)];
                }
                kernel.eval(&lag)
            })
            .collect::<Vec<T>>()
    };
    let rows: Vec<Vec<T>> = if n >= PAR_ROWS {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    };
    Matrix::from_vec(n, m, rows.into_iter().flatten().collect())
}

/// Symmetric `k(X, X)`: the upper triangle mirrors the lower one exactly.
pub fn gram_symmetric<T: Scalar>(x: &Matrix<T>, kernel: &KernelSpec<T>) -> Result<Matrix<T>> {
    kernel.check_dim(x.cols())?;
    if !x.is_finite() {
        return Err(Error::NonFinite("kernel inputs"));
    }
    let (n, p) = (x.rows(), x.cols());
    let row = |i: usize| {
        let xi = x.row(i);
        let mut lag = vec![T::zero(); p];
        (0..=i)
            .map(|j| {
                for (d, l) in lag.iter_mut().enumerate() {
                    *l = xi[d] - x[(j, d)];
                }
                kernel.eval(&lag)
            })
            .collect::<Vec<T>>()
    };
    let lower: Vec<Vec<T>> = if n >= PAR_ROWS {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    };
    let mut k = Matrix::zeros(n, n);
    for (i, r) in lower.into_iter().enumerate() {
        for (j, v) in r.into_iter().enumerate() {
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelKind, SlsmComponent, SlsmParams};

    fn kernel() -> KernelSpec<f64> {
        KernelSpec::mixture(
            KernelKind::Slsm,
            SlsmParams::new(vec![SlsmComponent::new(1.5, 0.9, 0.4, 0.2).unwrap()], 0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_point() {
        let x = Matrix::column(&[3.0]);
        let k = gram(&x, &x, &kernel()).unwrap();
        assert_eq!(k.rows(), 1);
        assert_eq!(k[(0, 0)], 1.5);
    }

    #[test]
    fn symmetric_exactly() {
        let x = Matrix::column(&(0..100).map(|i| (i as f64 * 0.77).sin() * 9.0).collect::<Vec<_>>());
        let k = gram(&x, &x, &kernel()).unwrap();
        assert_eq!(k, k.transpose());
        assert_eq!(k, gram_symmetric(&x, &kernel()).unwrap());
    }

    #[test]
    fn rejects_non_finite_and_dim_mismatch() {
        let x = Matrix::column(&[1.0, f64::NAN]);
        assert!(gram(&x, &x, &kernel()).is_err());
        let x2 = Matrix::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(gram(&x2, &x2, &kernel()).is_err());
    }
}
