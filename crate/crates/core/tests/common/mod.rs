#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slsm_core::kernel::{KernelKind, KernelSpec, SlsmComponent, SlsmParams};
use slsm_core::{Dataset, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn airline() -> Vec<f64> {
    let text = include_str!("../data/airline.csv");
    text.lines().skip(1).map(|l| l.trim().parse().unwrap()).collect()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature on [a, b].
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Quadrature over consecutive breakpoints, so kinks sit on panel edges.
pub fn quad_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> f64 {
    let per = tol / (points.len().max(2) - 1) as f64;
    points.windows(2).map(|p| quad(&f, p[0], p[1], per)).sum()
}

/// Asymmetric Laplace density with mean shift `gamma` about `mu`, written in the
/// (κ, σ) form: rates √2κ/σ on the right and √2/(σκ) on the left.
pub fn asym_laplace(s: f64, mu: f64, sigma: f64, gamma: f64) -> f64 {
    let r = std::f64::consts::SQRT_2 * gamma / sigma;
    let kappa = 0.5 * ((r * r + 4.0).sqrt() - r);
    let c = std::f64::consts::SQRT_2 / sigma * kappa / (1.0 + kappa * kappa);
    let x = s - mu;
    if x >= 0.0 {
        c * (-std::f64::consts::SQRT_2 * kappa / sigma * x).exp()
    } else {
        c * (std::f64::consts::SQRT_2 / (sigma * kappa) * x).exp()
    }
}

pub fn gauss(s: f64, mu: f64, sigma: f64) -> f64 {
    let z = (s - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

pub const QUAD_TOL: f64 = 1e-9;

/// Covariance at lag `tau` by integrating the symmetrized skewed Laplace density
/// against e^{isτ}. The imaginary part cancels, leaving a cosine transform.
pub fn slsm_by_quadrature(tau: f64, c: &SlsmComponent<f64>) -> f64 {
    let half = c.freq.abs() + 40.0 * c.scale.max(c.skew.abs());
    let dens = |s: f64| {
        0.5 * (asym_laplace(s, c.freq, c.scale, c.skew) + asym_laplace(-s, c.freq, c.scale, c.skew))
    };
    let mut pts = vec![-half, -c.freq.abs(), 0.0, c.freq.abs(), half];
    pts.dedup();
    c.weight * quad_pieces(|s| dens(s) * (s * tau).cos(), &pts, QUAD_TOL)
}

pub fn sm_by_quadrature(tau: f64, c: &SlsmComponent<f64>) -> f64 {
    let half = c.freq.abs() + 40.0 * c.scale;
    let dens = |s: f64| 0.5 * (gauss(s, c.freq, c.scale) + gauss(-s, c.freq, c.scale));
    let pts = [-half, -c.freq.abs(), 0.0, c.freq.abs(), half];
    c.weight * quad_pieces(|s| dens(s) * (s * tau).cos(), &pts, QUAD_TOL)
}

pub fn random_component(rng: &mut ChaCha8Rng, skewed: bool) -> SlsmComponent<f64> {
    SlsmComponent {
        weight: rng.random_range(0.2..2.0),
        freq: rng.random_range(0.05..3.0),
        scale: rng.random_range(0.1..1.5),
        skew: if skewed { rng.random_range(-1.0..1.0) } else { 0.0 },
    }
}

pub fn random_kernel(rng: &mut ChaCha8Rng, kind: KernelKind, q: usize, noise: f64) -> KernelSpec<f64> {
    let skewed = kind == KernelKind::Slsm;
    let components = (0..q).map(|_| random_component(rng, skewed)).collect();
    KernelSpec::mixture(
        kind,
        SlsmParams {
            components,
            noise_var: noise,
        },
    )
    .unwrap()
}

pub fn random_inputs(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Vec<f64> {
    let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..span)).collect();
    t.sort_by(f64::total_cmp);
    t
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, span: f64) -> Dataset {
    let t = random_inputs(rng, n, span);
    let y = t
        .iter()
        .map(|&v| (0.7 * v).sin() + 0.3 * (2.1 * v).cos() + rng.random_range(-0.3..0.3))
        .collect();
    Dataset::from_series(&t, y).unwrap()
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.row(i)[j])
}

/// Covariance built entry by entry from `eval_scalar`, independent of the Gram routines.
pub fn dense_cov(kernel: &KernelSpec<f64>, a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| kernel.eval_scalar(a[i] - b[j]))
}

pub struct DenseOracle {
    pub nlml: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// NLML and predictions through an explicit LU inverse and determinant.
pub fn dense_oracle(kernel: &KernelSpec<f64>, t: &[f64], y: &[f64], ts: &[f64]) -> DenseOracle {
    let n = t.len();
    let mut k = dense_cov(kernel, t, t);
    for i in 0..n {
        k[(i, i)] += kernel.noise_var();
    }
    let det = k.clone().lu().determinant();
    let kinv = k.try_inverse().unwrap();
    let yv = DVector::from_column_slice(y);
    let alpha = &kinv * &yv;
    let nlml = 0.5 * yv.dot(&alpha) + 0.5 * det.ln() + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let ks = dense_cov(kernel, ts, t);
    let mean = (&ks * &alpha).iter().copied().collect();
    let var = (0..ts.len())
        .map(|i| {
            let row = ks.row(i).transpose();
            kernel.eval_scalar(0.0) - row.dot(&(&kinv * &row))
        })
        .collect();
    DenseOracle { nlml, mean, var }
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
