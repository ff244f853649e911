//! Expectation maximization for Laplace or Gaussian mixtures fitted to periodogram
//! bins treated as power-weighted samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::periodogram::SpectrumEstimate;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixtureKind {
    Laplace,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent<T> {
    pub weight: T,
    pub location: T,
    /// Laplace: mean absolute deviation `b`. Gaussian: standard deviation.
    pub scale: T,
}

impl<T: Scalar> MixtureComponent<T> {
    fn log_density(&self, kind: MixtureKind, s: T) -> T {
        match kind {
            MixtureKind::Laplace => {
                -(T::lit(2.0) * self.scale).ln() - (s - self.location).abs() / self.scale
            }
            MixtureKind::Gaussian => {
                let z = (s - self.location) / self.scale;
                -T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() - self.scale.ln()
                    - T::lit(0.5) * z * z
            }
        }
    }

    /// Density at `s`.
    pub fn density(&self, kind: MixtureKind, s: T) -> T {
        self.log_density(kind, s).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit<T> {
    pub kind: MixtureKind,
    pub components: Vec<MixtureComponent<T>>,
    /// Weighted log-likelihood per iteration of the final (uninterrupted) EM run.
    pub loglik_trace: Vec<T>,
    /// Components re-initialized after degenerating.
    pub reseeded: usize,
    /// Components removed after degenerating twice.
    pub dropped: usize,
}

impl<T: Scalar> MixtureFit<T> {
    pub fn q(&self) -> usize {
        self.components.len()
    }

    pub fn final_loglik(&self) -> T {
        self.loglik_trace.last().copied().unwrap_or_else(T::neg_infinity)
    }

    /// Mixture density `Σ w̃_i φ_i(s)`.
    pub fn density(&self, s: T) -> T {
        self.components
            .iter()
            .map(|c| c.weight * c.density(self.kind, s))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once the log-likelihood changes by less than this.
    pub tol: f64,
    /// Components whose scale falls below this are degenerate.
    pub min_scale: f64,
    /// Components whose weight falls below this are degenerate.
    pub min_weight: f64,
    /// Lower bound on fitted scales, as a fraction of the bin width. A peak
    /// narrower than one bin cannot be resolved and would otherwise collapse.
    pub scale_floor_bins: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-8,
            min_scale: 1e-8,
            min_weight: 1e-10,
            scale_floor_bins: 0.5,
        }
    }
}

/// Fit a `q`-component mixture with default settings.
pub fn em_mixture<T: Scalar>(
    spec: &SpectrumEstimate<T>,
    q: usize,
    kind: MixtureKind,
    seed: u64,
) -> Result<MixtureFit<T>> {
    em_mixture_with(spec, q, kind, seed, &EmConfig::default())
}

/// Power-proportional draw of a bin index.
fn sample_bin<T: Scalar>(weights: &[T], rng: &mut ChaCha8Rng, exclude: &[usize]) -> usize {
    let total: f64 = weights
        .iter()
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(_, w)| w.to_f64_lossy())
        .sum();
    if total <= 0.0 {
        return weights
            .iter()
            .enumerate()
            .find(|(i, w)| !exclude.contains(i) && w.to_f64_lossy() > 0.0)
            .map_or(0, |(i, _)| i);
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if exclude.contains(&i) {
            continue;
        }
        let w = w.to_f64_lossy();
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}

fn weighted_median<T: Scalar>(xs: &[T], ws: &[T], total: T) -> T {
    let half = T::lit(0.5) * total;
    let mut acc = T::zero();
    for (&x, &w) in xs.iter().zip(ws) {
        acc = acc + w;
        if acc >= half {
            return x;
        }
    }
    xs[xs.len() - 1]
}

pub fn em_mixture_with<T: Scalar>(
    spec: &SpectrumEstimate<T>,
    q: usize,
    kind: MixtureKind,
    seed: u64,
    cfg: &EmConfig,
) -> Result<MixtureFit<T>> {
    if q == 0 {
        return Err(Error::InvalidParameter("mixture needs Q >= 1".into()));
    }
    let total = spec.total_power();
    if spec.is_empty() || !(total > T::zero()) || !total.is_finite() {
        return Err(Error::EmptySpectrum);
    }
    let s = &spec.freqs;
    let p: Vec<T> = spec.powers.iter().map(|&v| v / total).collect();
    let n_pos = p.iter().filter(|&&v| v > T::zero()).count();
    let q = q.min(n_pos);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = s[0];
    let hi = s[s.len() - 1];
    let span = (hi - lo).max(spec.bin_width());
    let scale0 = (span / T::from_usize_lossy(10 * q)).max(T::lit(2.0) * spec.bin_width());

    let mut picked = Vec::with_capacity(q);
    for _ in 0..q {
        let i = sample_bin(&p, &mut rng, &picked);
        picked.push(i);
    }
    let w0 = T::one() / T::from_usize_lossy(q);
    let mut comps: Vec<MixtureComponent<T>> = picked
        .iter()
        .map(|&i| MixtureComponent {
            weight: w0,
            location: s[i],
            scale: scale0,
        })
        .collect();
    let mut reseeded_flags = vec![false; q];
    let mut reseeded = 0;
    let mut dropped = 0;
    let mut trace: Vec<T> = Vec::new();

    let n = s.len();
    let mut resp = vec![vec![T::zero(); n]; comps.len()];
    let min_scale = T::lit(cfg.min_scale);
    let min_weight = T::lit(cfg.min_weight);
    let tol = T::lit(cfg.tol);
    let floor = T::lit(cfg.scale_floor_bins) * spec.bin_width();

    let mut iter = 0;
    loop {
        // E-step.
        let mut loglik = T::zero();
        let mut logs = vec![T::zero(); comps.len()];
        for j in 0..n {
            for (l, c) in logs.iter_mut().zip(&comps) {
                *l = c.weight.ln() + c.log_density(kind, s[j]);
            }
            let m = logs.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = m + logs.iter().map(|&l| (l - m).exp()).sum::<T>().ln();
            for (r, &l) in resp.iter_mut().zip(&logs) {
                r[j] = (l - lse).exp();
            }
            loglik = loglik + p[j] * lse;
        }
        let converged = trace
            .last()
            .is_some_and(|&prev: &T| (loglik - prev).abs() < tol);
        trace.push(loglik);
        if converged || iter >= cfg.max_iters {
            break;
        }
        iter += 1;

        // M-step.
        for (c, r) in comps.iter_mut().zip(&resp) {
            let v: Vec<T> = r.iter().zip(&p).map(|(&a, &b)| a * b).collect();
            let mass: T = v.iter().copied().sum();
            c.weight = mass;
            if !(mass > T::zero()) {
                c.scale = T::zero();
                continue;
            }
            match kind {
                MixtureKind::Laplace => {
                    let loc = weighted_median(s, &v, mass);
                    let mad = v
                        .iter()
                        .zip(s)
                        .map(|(&w, &x)| w * (x - loc).abs())
                        .sum::<T>()
                        / mass;
                    c.location = loc;
                    c.scale = mad.max(floor);
                }
                MixtureKind::Gaussian => {
                    let mean = v.iter().zip(s).map(|(&w, &x)| w * x).sum::<T>() / mass;
                    let var = v
                        .iter()
                        .zip(s)
                        .map(|(&w, &x)| w * (x - mean) * (x - mean))
                        .sum::<T>()
                        / mass;
                    c.location = mean;
                    c.scale = var.sqrt().max(floor);
                }
            }
        }

        // Degenerate components: reseed once, then drop.
        let mut changed = false;
        let mut k = 0;
        while k < comps.len() {
            let c = comps[k];
            let degenerate = !(c.scale >= min_scale) || !(c.weight >= min_weight);
            if !degenerate {
                k += 1;
                continue;
            }
            changed = true;
            if !reseeded_flags[k] {
                reseeded_flags[k] = true;
                reseeded += 1;
                let i = sample_bin(&p, &mut rng, &[]);
                comps[k] = MixtureComponent {
                    weight: w0,
                    location: s[i],
                    scale: scale0,
                };
                k += 1;
            } else if comps.len() > 1 {
                dropped += 1;
                comps.remove(k);
                reseeded_flags.remove(k);
                resp.remove(k);
            } else {
                // Last component standing: fall back to its initial shape.
                comps[k].scale = scale0;
                comps[k].weight = T::one();
                k += 1;
            }
        }
        if changed {
            let wsum: T = comps.iter().map(|c| c.weight).sum();
            comps.iter_mut().for_each(|c| c.weight = c.weight / wsum);
            trace.clear();
        }
    }

    Ok(MixtureFit {
        kind,
        components: comps,
        loglik_trace: trace,
        reseeded,
        dropped,
    })
}
