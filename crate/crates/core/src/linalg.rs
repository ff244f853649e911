//! Dense row-major matrices and the Cholesky machinery behind exact GP inference.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative jitter ladder, multiplied by `trace / n` of the matrix being factored.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-8, 1e-6, 1e-4, 1e-2];

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Single-column matrix.
    pub fn column(values: &[T]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn col_values(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn add_diagonal(&mut self, v: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] = self[(i, i)] + v;
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with four independent accumulators.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] = acc[0] + a[k] * b[k];
        acc[1] = acc[1] + a[k + 1] * b[k + 1];
        acc[2] = acc[2] + a[k + 2] * b[k + 2];
        acc[3] = acc[3] + a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..n {
        s = s + a[k] * b[k];
    }
    s
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factor a symmetric matrix; only the lower triangle of `a` is read.
    /// Returns `None` when a pivot is not strictly positive.
    pub fn decompose(a: &Matrix<T>) -> Option<Self> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let ljc: Vec<T> = l.row(j)[..j].to_vec();
            let d = a[(j, j)] - dot(&ljc, &ljc);
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let pivot = d.sqrt();
            l[(j, j)] = pivot;
            for i in j + 1..n {
                let li = l.row_mut(i);
                let v = (a[(i, j)] - dot(&li[..j], &ljc)) / pivot;
                li[j] = v;
            }
        }
        Some(Self { l })
    }

    pub fn l(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solve `L x = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s = x[i] - dot(&row[..i], &x[..i]);
            x[i] = s / row[i];
        }
        x
    }

    /// Solve `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            x[i] = x[i] / self.l[(i, i)];
            let xi = x[i];
            let row = self.l.row(i);
            axpy(-xi, &row[..i], &mut x[..i]);
        }
        x
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `log |A| = 2 Σ log L_ii`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        two * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<T>()
    }

    /// Dense `A⁻¹`, built from `L⁻¹` with row-contiguous updates.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        // M = L⁻¹, lower triangular.
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            let lrow = self.l.row(i).to_vec();
            let mut acc = vec![T::zero(); i + 1];
            acc[i] = T::one();
            for (k, &lik) in lrow.iter().enumerate().take(i) {
                if lik != T::zero() {
                    axpy(-lik, &m.row(k)[..=k], &mut acc[..=k]);
                }
            }
            let inv = T::one() / lrow[i];
            let dst = m.row_mut(i);
            for (d, a) in dst[..=i].iter_mut().zip(acc) {
                *d = a * inv;
            }
        }
        // A⁻¹ = Mᵀ M, accumulated row by row into the lower triangle.
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let mk = m.row(k)[..=k].to_vec();
            for i in 0..=k {
                let a = mk[i];
                if a != T::zero() {
                    axpy(a, &mk[..=i], &mut out.row_mut(i)[..=i]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[(j, i)] = out[(i, j)];
            }
        }
        out
    }
}

/// Factor `a + jitter·I`, escalating through [`JITTER_LADDER`] (scaled by `trace / n`)
/// when the plain factorization fails. Returns the factor and the absolute jitter used.
pub fn cholesky_with_jitter<T: Scalar>(a: &Matrix<T>) -> Result<(Cholesky<T>, T)> {
    if !a.is_finite() {
        return Err(Error::Overflow("covariance matrix"));
    }
    if let Some(c) = Cholesky::decompose(a) {
        return Ok((c, T::zero()));
    }
    let n = a.rows().max(1);
    let mut base = a.trace() / T::from_usize_lossy(n);
    if !(base > T::zero()) {
        base = T::one();
    }
    let mut last = T::zero();
    for eps in JITTER_LADDER {
        let jitter = T::lit(eps) * base;
        last = jitter;
        let mut aj = a.clone();
        aj.add_diagonal(jitter);
        if let Some(c) = Cholesky::decompose(&aj) {
            return Ok((c, jitter));
        }
    }
    Err(Error::Cholesky {
        jitter: last.to_f64_lossy(),
    })
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. Intended for
/// verification of modest matrices, not for the inference path.
pub fn symmetric_eigenvalues<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let n = a.rows();
    let mut m = a.clone();
    let tol = T::epsilon() * T::lit(0.5);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..i {
                off = off + m[(i, j)] * m[(i, j)];
            }
        }
        let scale: T = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum::<T>() + off;
        if off <= tol * tol * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Matrix<f64> {
        let b = Matrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
        let mut a = b.matmul(&b.transpose()).unwrap();
        a.add_diagonal(0.5);
        a
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd(9);
        let c = Cholesky::decompose(&a).unwrap();
        let rec = c.l().matmul(&c.l().transpose()).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert!((rec[(i, j)] - a[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_and_inverse_agree() {
        let a = spd(12);
        let c = Cholesky::decompose(&a).unwrap();
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let x = c.solve(&b);
        let ax = a.matvec(&x).unwrap();
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
        let inv = c.inverse();
        let id = a.matmul(&inv).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let a = spd(8);
        let c = Cholesky::decompose(&a).unwrap();
        let ev = symmetric_eigenvalues(&a);
        let want: f64 = ev.iter().map(|v| v.ln()).sum();
        assert!((c.log_det() - want).abs() < 1e-10);
    }

    #[test]
    fn jitter_rescues_singular_matrix() {
        let a = Matrix::from_fn(3, 3, |_, _| 1.0_f64);
        assert!(Cholesky::decompose(&a).is_none());
        let (_, jitter) = cholesky_with_jitter(&a).unwrap();
        assert!(jitter > 0.0);
        assert!(jitter <= 1e-2);
    }

    #[test]
    fn zero_matrix_uses_unit_base() {
        let a = Matrix::<f64>::zeros(4, 4);
        let (_, jitter) = cholesky_with_jitter(&a).unwrap();
        assert_eq!(jitter, 1e-10);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let mut a = Matrix::<f64>::identity(3);
        a[(2, 2)] = -5.0;
        match cholesky_with_jitter(&a) {
            Err(Error::Cholesky { jitter }) => assert!(jitter > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
