//! Robust Bayesian committee machine: one shared hyper-parameter vector trained
//! on the sum of per-expert marginal likelihoods, and a weighted product of
//! expert predictions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{nlml_grad, Dataset, Normalization, Prediction, TrainedModel};
use crate::kernel::KernelSpec;
use crate::linalg::Matrix;
use crate::optimizer::{minimize, OptConfig, OptResult};
use crate::scalar::Scalar;

/// Default largest expert.
pub const EXPERT_SIZE_CAP: usize = 512;

/// `⌈n / 512⌉`, at least one.
pub fn default_experts(n: usize) -> usize {
    n.div_ceil(EXPERT_SIZE_CAP).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    /// Consecutive blocks; keeps time series locally intact.
    #[default]
    Contiguous,
    /// Seeded shuffle, then blocks; each subset is returned sorted.
    Random,
}

/// Split `0..n` into `m` disjoint subsets whose sizes differ by at most one.
pub fn partition(
    n: usize,
    m: usize,
    strategy: PartitionStrategy,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if m == 0 || m > n {
        return Err(Error::Partition { n, m });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if strategy == PartitionStrategy::Random {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let base = n / m;
    let extra = n % m;
    let mut out = Vec::with_capacity(m);
    let mut start = 0;
    for i in 0..m {
        let len = base + usize::from(i < extra);
        let mut block = order[start..start + len].to_vec();
        block.sort_unstable();
        out.push(block);
        start += len;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// `β_i = ½(ln σ_prior² − ln σ_i²)`.
    #[default]
    Entropy,
    /// `β_i = 1/M`.
    Uniform,
}

/// Sum of per-expert NLMLs and gradients at a shared kernel, experts in parallel,
/// reduced in expert order.
pub fn rbcm_objective<T: Scalar>(
    kernel: &KernelSpec<T>,
    experts: &[Dataset<T>],
) -> Result<(T, Vec<T>)> {
    let parts: Vec<Result<(T, Vec<T>)>> =
        experts.par_iter().map(|d| nlml_grad(kernel, d)).collect();
    let mut total = T::zero();
    let mut grad = vec![T::zero(); kernel.n_kernel_slots() + 1];
    for p in parts {
        let (f, g) = p?;
        total = total + f;
        for (a, b) in grad.iter_mut().zip(g) {
            *a = *a + b;
        }
    }
    Ok((total, grad))
}

/// Experts sharing one kernel, each conditioned on its own subset.
#[derive(Debug, Clone)]
pub struct ExpertEnsemble<T> {
    kernel: KernelSpec<T>,
    normalization: Normalization<T>,
    subsets: Vec<Vec<usize>>,
    experts: Vec<TrainedModel<T>>,
    beta_mode: BetaMode,
    fingerprint: String,
}

impl<T: Scalar> ExpertEnsemble<T> {
    /// Condition `kernel` (target units) on each subset of `data`. Subsets may
    /// overlap, which is only meaningful for validation.
    pub fn from_subsets(
        kernel: KernelSpec<T>,
        data: &Dataset<T>,
        subsets: Vec<Vec<usize>>,
        normalization: Normalization<T>,
        beta_mode: BetaMode,
    ) -> Result<Self> {
        if subsets.is_empty() || subsets.iter().any(|s| s.is_empty()) {
            return Err(Error::Partition {
                n: data.n(),
                m: subsets.len(),
            });
        }
        if let Some(&bad) = subsets.iter().flatten().find(|&&i| i >= data.n()) {
            return Err(Error::InvalidParameter(format!(
                "expert index {bad} out of range for n={}",
                data.n()
            )));
        }
        let experts = subsets
            .par_iter()
            .map(|idx| {
                let d = data.subset(idx)?;
                TrainedModel::condition(kernel.clone(), &d, normalization.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel,
            normalization,
            subsets,
            experts,
            beta_mode,
            fingerprint: data.fingerprint(),
        })
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn normalization(&self) -> &Normalization<T> {
        &self.normalization
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn experts(&self) -> &[TrainedModel<T>] {
        &self.experts
    }

    pub fn beta_mode(&self) -> BetaMode {
        self.beta_mode
    }

    pub fn set_beta_mode(&mut self, mode: BetaMode) {
        self.beta_mode = mode;
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn n_experts(&self) -> usize {
        self.experts.len()
    }

    /// Sum of per-expert NLMLs in target units.
    pub fn nlml(&self) -> T {
        self.experts.iter().map(|e| e.nlml()).sum()
    }

    /// Aggregated prediction. The prior variance is `k(0)`, plus `σ_n²` when
    /// `observation_noise` is set (expert variances then include noise too).
    pub fn predict(&self, xstar: &Matrix<T>, observation_noise: bool) -> Result<Prediction<T>> {
        let preds = self
            .experts
            .par_iter()
            .map(|e| e.predict(xstar, observation_noise))
            .collect::<Result<Vec<_>>>()?;
        let mut prior = self.kernel.signal_variance();
        if observation_noise {
            prior = prior + self.kernel.noise_var();
        }
        if !(prior > T::zero()) {
            return Err(Error::NonFiniteObjective);
        }
        let m = preds.len();
        let inv_m = T::one() / T::from_usize_lossy(m);
        let y_mean = self.normalization.y_mean;
        let tiny = T::min_positive_value();
        let ln_prior = prior.ln();
        let rows = xstar.rows();
        let mut mean = Vec::with_capacity(rows);
        let mut variance = Vec::with_capacity(rows);
        for j in 0..rows {
            let mut beta_sum = T::zero();
            let mut prec = T::zero();
            let mut weighted = T::zero();
            for p in &preds {
                let mu = p.mean[j] - y_mean;
                let v = p.variance[j];
                if !mu.is_finite() || !v.is_finite() {
                    return Err(Error::Overflow("expert prediction"));
                }
                let v = v.min(prior).max(tiny);
                let beta = match self.beta_mode {
                    BetaMode::Entropy => T::lit(0.5) * (ln_prior - v.ln()),
                    BetaMode::Uniform => inv_m,
                };
                beta_sum = beta_sum + beta;
                prec = prec + beta / v;
                weighted = weighted + beta * mu / v;
            }
            prec = prec + (T::one() - beta_sum) / prior;
            let var = T::one() / prec;
            mean.push(y_mean + var * weighted);
            variance.push(var);
        }
        Ok(Prediction {
            mean,
            variance,
            clamped: preds.iter().map(|p| p.clamped).sum(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbcmConfig {
    pub experts: usize,
    pub strategy: PartitionStrategy,
    pub beta_mode: BetaMode,
    pub opt: OptConfig,
}

impl RbcmConfig {
    pub fn new(experts: usize) -> Self {
        Self {
            experts,
            strategy: PartitionStrategy::Contiguous,
            beta_mode: BetaMode::Entropy,
            opt: OptConfig::default(),
        }
    }
}

/// Train one shared kernel from `init` (normalized scale) on the partitioned
/// data and build the ensemble.
pub fn rbcm_fit<T: Scalar>(
    data: &Dataset<T>,
    init: &KernelSpec<T>,
    cfg: &RbcmConfig,
) -> Result<(ExpertEnsemble<T>, OptResult<T>)> {
    let subsets = partition(data.n(), cfg.experts, cfg.strategy, cfg.opt.seed)?;
    init.check_dim(data.dim())?;
    let normalization = Normalization::from_data(data);
    let normalized = normalization.apply(data)?;
    let parts = subsets
        .iter()
        .map(|idx| normalized.subset(idx))
        .collect::<Result<Vec<_>>>()?;
    let x0 = init.transformed()?;
    let objective = |x: &[T]| -> Result<(T, Vec<T>)> {
        let k = init.with_transformed(x)?;
        rbcm_objective(&k, &parts)
    };
    let opt = minimize(&objective, &x0, &cfg.opt)?;
    let kernel = init
        .with_transformed(&opt.x_best)?
        .scale_amplitude(normalization.variance_scale());
    let ens = ExpertEnsemble::from_subsets(kernel, data, subsets, normalization, cfg.beta_mode)?;
    Ok((ens, opt))
}
