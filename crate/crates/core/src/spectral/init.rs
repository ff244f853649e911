//! Starting hyper-parameters from a fitted spectral mixture, or seeded random
//! draws when no periodogram is available.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::em::{em_mixture, MixtureFit, MixtureKind};
use super::periodogram::{periodogram, SpectrumEstimate};
use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::kernel::{
    BaselineKernelParams, KernelKind, KernelSpec, MultiSlsmComponent, MultiSlsmParams,
    SlsmComponent, SlsmParams, MIN_FREQ,
};
use crate::scalar::Scalar;

/// Noise variance at initialization, as a fraction of the target variance.
pub const INIT_NOISE_FRACTION: f64 = 0.1;

/// Smallest scale handed to the kernel; EM scales can collapse towards zero.
const MIN_INIT_SCALE: f64 = 1e-6;

/// Mixture family whose EM fit seeds `kind`.
pub fn mixture_kind_for(kind: KernelKind) -> Result<MixtureKind> {
    match kind {
        KernelKind::Slsm | KernelKind::Lkp => Ok(MixtureKind::Laplace),
        KernelKind::Sm => Ok(MixtureKind::Gaussian),
        other => Err(Error::InvalidParameter(format!(
            "{other} has no spectral initialization"
        ))),
    }
}

fn usable_var<T: Scalar>(v: T) -> Result<T> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ZeroVariance)
    }
}

/// Kernel parameters from a mixture fit: `w_i = w̃_i·var(y)`, `μ_i = μ̃_i`, `σ_i`
/// from the fitted scale (a Laplace scale `b` becomes `σ = √2·b`), `γ_i ~ U(−1, 1)`
/// for SLSM, and `σ_n² = 0.1·var(y)`.
pub fn init_params<T: Scalar>(
    fit: &MixtureFit<T>,
    kind: KernelKind,
    signal_var: T,
    seed: u64,
) -> Result<KernelSpec<T>> {
    let var = usable_var(signal_var)?;
    if fit.components.is_empty() {
        return Err(Error::InvalidParameter("mixture fit has no components".into()));
    }
    let expected = mixture_kind_for(kind)?;
    if expected != fit.kind {
        return Err(Error::InvalidParameter(format!(
            "{kind} needs a {expected:?} mixture, got {:?}",
            fit.kind
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let to_sigma = match fit.kind {
        MixtureKind::Laplace => T::SQRT_2(),
        MixtureKind::Gaussian => T::one(),
    };
    let components = fit
        .components
        .iter()
        .map(|c| {
            let skew = if kind == KernelKind::Slsm {
                T::lit(rng.random_range(-1.0..1.0))
            } else {
                T::zero()
            };
            SlsmComponent {
                weight: c.weight * var,
                freq: c.location.max(T::lit(MIN_FREQ)),
                scale: (c.scale * to_sigma).max(T::lit(MIN_INIT_SCALE)),
                skew,
            }
        })
        .collect();
    KernelSpec::mixture(
        kind,
        SlsmParams {
            components,
            noise_var: T::lit(INIT_NOISE_FRACTION) * var,
        },
    )
}

fn median<T: Scalar>(mut v: Vec<T>) -> Option<T> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) * T::lit(0.5)
    })
}

/// Median nonzero pairwise distance along column `j` over (at most) the first 256 rows.
fn median_pairwise<T: Scalar>(data: &Dataset<T>, j: usize) -> T {
    let n = data.n().min(256);
    let mut d = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for a in 0..n {
        for b in 0..a {
            let v = (data.x[(a, j)] - data.x[(b, j)]).abs();
            if v > T::zero() {
                d.push(v);
            }
        }
    }
    median(d).unwrap_or_else(T::one)
}

/// Seeded random start: `μ ~ U(0, π/Δt)` (per input dimension, `π/median pairwise
/// distance` when there is no sampling interval), `σ ~ U(0.1, 1)·(μ range)`,
/// `w = var/Q`, `γ ~ U(−1, 1)` for SLSM, `σ_n² = 0.1·var`.
pub fn random_init<T: Scalar>(
    data: &Dataset<T>,
    kind: KernelKind,
    q: usize,
    signal_var: T,
    seed: u64,
) -> Result<KernelSpec<T>> {
    mixture_kind_for(kind)?;
    if q == 0 {
        return Err(Error::InvalidParameter("Q must be >= 1".into()));
    }
    let var = usable_var(signal_var)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = var / T::from_usize_lossy(q);
    let noise_var = T::lit(INIT_NOISE_FRACTION) * var;
    let skewed = kind == KernelKind::Slsm;

    if data.is_univariate() {
        let spacing = data.sampling.delta_t.unwrap_or_else(|| median_pairwise(data, 0));
        let range = T::PI() / spacing;
        let components = (0..q)
            .map(|_| {
                let mu: f64 = rng.random_range(0.0..1.0);
                let s: f64 = rng.random_range(0.1..1.0);
                let g: f64 = rng.random_range(-1.0..1.0);
                SlsmComponent {
                    weight: w,
                    freq: (T::lit(mu) * range).max(T::lit(MIN_FREQ)),
                    scale: T::lit(s) * range,
                    skew: if skewed { T::lit(g) } else { T::zero() },
                }
            })
            .collect();
        return KernelSpec::mixture(kind, SlsmParams { components, noise_var });
    }

    let p = data.dim();
    let ranges: Vec<T> = (0..p).map(|j| T::PI() / median_pairwise(data, j)).collect();
    let components = (0..q)
        .map(|_| {
            let mut freq = Vec::with_capacity(p);
            let mut scale_diag = Vec::with_capacity(p);
            let mut skew = Vec::with_capacity(p);
            for &r in &ranges {
                let mu: f64 = rng.random_range(0.0..1.0);
                let s: f64 = rng.random_range(0.1..1.0);
                let g: f64 = rng.random_range(-1.0..1.0);
                freq.push((T::lit(mu) * r).max(T::lit(MIN_FREQ)));
                let sd = T::lit(s) * r;
                scale_diag.push(sd * sd);
                skew.push(if skewed { T::lit(g) } else { T::zero() });
            }
            MultiSlsmComponent {
                weight: w,
                freq,
                scale_diag,
                skew,
            }
        })
        .collect();
    KernelSpec::multi_mixture(kind, MultiSlsmParams { components, noise_var })
}

/// SE / RQ start: amplitude `var`, lengthscale a tenth of the input span (per
/// unit-scaled column for multivariate data), `α = 1`, `σ_n² = 0.1·var`.
pub fn baseline_init<T: Scalar>(
    data: &Dataset<T>,
    kind: KernelKind,
    signal_var: T,
) -> Result<KernelSpec<T>> {
    let var = usable_var(signal_var)?;
    let ell = if data.is_univariate() {
        let col = data.x.col_values(0);
        let lo = col.iter().copied().fold(T::infinity(), T::min);
        let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
        let span = hi - lo;
        if span > T::zero() {
            span * T::lit(0.1)
        } else {
            T::one()
        }
    } else {
        T::one()
    };
    let params = match kind {
        KernelKind::Se => BaselineKernelParams::se(var, ell)?,
        KernelKind::Rq => BaselineKernelParams::rq(var, ell, T::one())?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "{other} is not a baseline kernel"
            )))
        }
    };
    KernelSpec::baseline(params, T::lit(INIT_NOISE_FRACTION) * var)
}

/// How a starting point was obtained.
#[derive(Debug, Clone)]
pub enum InitSource<T> {
    Spectral {
        spectrum: SpectrumEstimate<T>,
        mixture: MixtureFit<T>,
    },
    Random,
    Baseline,
}

/// Starting kernel for `data` (already normalized): spectral initialization for
/// uniformly sampled univariate series, seeded random draws otherwise.
pub fn initial_kernel<T: Scalar>(
    data: &Dataset<T>,
    kind: KernelKind,
    q: usize,
    seed: u64,
) -> Result<(KernelSpec<T>, InitSource<T>)> {
    let var = data.y_var();
    if !kind.is_spectral() {
        return Ok((baseline_init(data, kind, var)?, InitSource::Baseline));
    }
    if data.is_univariate() && data.sampling.uniform && data.n() >= 4 {
        if let Some(dt) = data.sampling.delta_t {
            let spectrum = periodogram(&data.y, dt)?;
            let mixture = em_mixture(&spectrum, q, mixture_kind_for(kind)?, seed)?;
            let kernel = init_params(&mixture, kind, var, seed)?;
            return Ok((kernel, InitSource::Spectral { spectrum, mixture }));
        }
    }
    Ok((random_init(data, kind, q, var, seed)?, InitSource::Random))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::spectral::MixtureComponent;

    fn fit(kind: MixtureKind) -> MixtureFit<f64> {
        MixtureFit {
            kind,
            components: vec![
                MixtureComponent {
                    weight: 0.25,
                    location: 0.5,
                    scale: 0.1,
                },
                MixtureComponent {
                    weight: 0.75,
                    location: 2.0,
                    scale: 0.2,
                },
            ],
            loglik_trace: vec![0.0],
            reseeded: 0,
            dropped: 0,
        }
    }

    #[test]
    fn weights_sum_to_signal_variance() {
        let k = init_params(&fit(MixtureKind::Laplace), KernelKind::Slsm, 1.0, 1).unwrap();
        assert!((k.signal_variance() - 1.0).abs() < 1e-15);
        assert!((k.noise_var() - 0.1).abs() < 1e-15);
        let k = init_params(&fit(MixtureKind::Gaussian), KernelKind::Sm, 4.0, 1).unwrap();
        assert!((k.signal_variance() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_scale_maps_to_sigma() {
        let k = init_params(&fit(MixtureKind::Laplace), KernelKind::Lkp, 1.0, 1).unwrap();
        let KernelSpec::Mixture { params, .. } = k else {
            panic!()
        };
        assert!((params.components[0].scale - 0.1 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(params.components[1].skew, 0.0);
    }

    #[test]
    fn skew_draws_are_seeded() {
        let a = init_params(&fit(MixtureKind::Laplace), KernelKind::Slsm, 1.0, 9).unwrap();
        let b = init_params(&fit(MixtureKind::Laplace), KernelKind::Slsm, 1.0, 9).unwrap();
        let c = init_params(&fit(MixtureKind::Laplace), KernelKind::Slsm, 1.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let KernelSpec::Mixture { params, .. } = a else {
            panic!()
        };
        assert!(params.components.iter().all(|c| c.skew.abs() <= 1.0));
    }

    #[test]
    fn mismatched_family_rejected() {
        assert!(init_params(&fit(MixtureKind::Gaussian), KernelKind::Slsm, 1.0, 0).is_err());
        assert!(init_params(&fit(MixtureKind::Laplace), KernelKind::Slsm, 0.0, 0).is_err());
    }

    #[test]
    fn random_init_respects_ranges() {
        let d = Dataset::from_series(&[0.0, 0.5, 1.5, 1.7, 3.0], vec![1.0, 2.0, 0.0, 1.0, 3.0])
            .unwrap();
        let k = random_init(&d, KernelKind::Slsm, 5, 2.0, 4).unwrap();
        let KernelSpec::Mixture { params, .. } = &k else {
            panic!()
        };
        let range = std::f64::consts::PI / 0.75;
        for c in &params.components {
            assert!(c.freq <= range);
            assert!(c.scale >= 0.1 * range && c.scale <= range);
            assert!((c.weight - 0.4).abs() < 1e-15);
        }
        assert_eq!(k, random_init(&d, KernelKind::Slsm, 5, 2.0, 4).unwrap());
    }

    #[test]
    fn multivariate_falls_back_to_random() {
        let x = Matrix::from_fn(20, 3, |i, j| ((i * (j + 2)) % 7) as f64);
        let y = (0..20).map(|i| (i as f64).sin()).collect();
        let d = Dataset::new(x, y).unwrap();
        let (k, src) = initial_kernel(&d, KernelKind::Sm, 3, 0).unwrap();
        assert!(matches!(src, InitSource::Random));
        assert_eq!(k.input_dim(), Some(3));
        assert_eq!(k.n_components(), 3);
    }

    #[test]
    fn frequency_scale_equivariance() {
        let y: Vec<f64> = (0..200)
            .map(|t| {
                let t = t as f64;
                (0.4 * t).sin() + 0.6 * (1.3 * t).cos() + 0.2 * (2.2 * t).sin()
            })
            .collect();
        let c = 4.0;
        let a = Dataset::regular(y.clone(), 1.0).unwrap();
        let b = Dataset::regular(y, 1.0 / c).unwrap();
        let (ka, _) = initial_kernel(&a, KernelKind::Slsm, 3, 11).unwrap();
        let (kb, _) = initial_kernel(&b, KernelKind::Slsm, 3, 11).unwrap();
        let (KernelSpec::Mixture { params: pa, .. }, KernelSpec::Mixture { params: pb, .. }) =
            (ka, kb)
        else {
            panic!()
        };
        assert_eq!(pa.q(), pb.q());
        for (x, z) in pa.components.iter().zip(&pb.components) {
            assert!((z.freq - c * x.freq).abs() < 1e-9 * z.freq);
            assert!((z.scale - c * x.scale).abs() < 1e-9 * z.scale);
            assert!((z.weight - x.weight).abs() < 1e-9);
            assert_eq!(z.skew, x.skew);
        }
    }
}
