use serde::{Deserialize, Serialize};

use super::dataset::{population_var, Dataset};
use super::inference::{factorize, nlml_grad_xy, Factorization, NlmlTerms};
use crate::error::{Error, Result};
use crate::kernel::{gram, KernelSpec};
use crate::linalg::{Cholesky, Matrix};
use crate::optimizer::{minimize, OptConfig, OptResult};
use crate::scalar::Scalar;

/// Affine maps applied before training: targets are centered and scaled to unit
/// variance; multivariate inputs are standardized per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization<T> {
    pub y_mean: T,
    pub y_std: T,
    /// Empty when inputs are used as-is (univariate series).
    #[serde(default)]
    pub x_means: Vec<T>,
    #[serde(default)]
    pub x_stds: Vec<T>,
}

impl<T: Scalar> Normalization<T> {
    pub fn identity() -> Self {
        Self {
            y_mean: T::zero(),
            y_std: T::one(),
            x_means: Vec::new(),
            x_stds: Vec::new(),
        }
    }

    /// Target statistics from `data`; inputs are standardized only when `data` is multivariate.
    pub fn from_data(data: &Dataset<T>) -> Self {
        let y_mean = data.y_mean();
        let mut y_std = population_var(&data.y).sqrt();
        if !(y_std > T::zero()) {
            y_std = T::one();
        }
        let (x_means, x_stds) = if data.dim() > 1 {
            (0..data.dim())
                .map(|j| {
                    let col = data.x.col_values(j);
                    let m = col.iter().copied().sum::<T>() / T::from_usize_lossy(col.len());
                    let mut s = population_var(&col).sqrt();
                    if !(s > T::zero()) {
                        s = T::one();
                    }
                    (m, s)
                })
                .unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        Self {
            y_mean,
            y_std,
            x_means,
            x_stds,
        }
    }

    pub fn transform_x(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if self.x_means.is_empty() {
            return Ok(x.clone());
        }
        if x.cols() != self.x_means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x_means.len(),
                actual: x.cols(),
            });
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x[(i, j)] - self.x_means[j]) / self.x_stds[j]
        }))
    }

    pub fn transform_y(&self, y: &[T]) -> Vec<T> {
        y.iter().map(|&v| (v - self.y_mean) / self.y_std).collect()
    }

    /// Normalized copy of `data`.
    pub fn apply(&self, data: &Dataset<T>) -> Result<Dataset<T>> {
        let mut d = Dataset::new(self.transform_x(&data.x)?, self.transform_y(&data.y))?;
        d.names = data.names.clone();
        Ok(d)
    }

    /// Factor that maps normalized-scale variances to target units.
    pub fn variance_scale(&self) -> T {
        self.y_std * self.y_std
    }
}

/// Predictive means and variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub mean: Vec<T>,
    pub variance: Vec<T>,
    /// Number of variances that came out negative and were clamped to zero.
    pub clamped: usize,
}

/// GP conditioned on training data: kernel in target units plus cached factorization.
#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    kernel: KernelSpec<T>,
    normalization: Normalization<T>,
    x_train: Matrix<T>,
    y_train: Vec<T>,
    factor: Factorization<T>,
    fingerprint: String,
    nlml: NlmlTerms<T>,
}

impl<T: Scalar> TrainedModel<T> {
    /// Condition `kernel` (target units, inputs in normalized coordinates) on `data`.
    pub fn condition(
        kernel: KernelSpec<T>,
        data: &Dataset<T>,
        normalization: Normalization<T>,
    ) -> Result<Self> {
        kernel.validate()?;
        let x_train = normalization.transform_x(&data.x)?;
        kernel.check_dim(x_train.cols())?;
        let centered: Vec<T> = data.y.iter().map(|&v| v - normalization.y_mean).collect();
        let factor = factorize(&kernel, &x_train, &centered)?;
        let half = T::lit(0.5);
        let nlml = NlmlTerms {
            data_fit: half * centered.iter().zip(&factor.alpha).map(|(&a, &b)| a * b).sum::<T>(),
            complexity: half * factor.chol.log_det(),
            constant: half * T::from_usize_lossy(data.n()) * (T::lit(2.0) * T::PI()).ln(),
        };
        Ok(Self {
            kernel,
            normalization,
            x_train,
            y_train: data.y.clone(),
            factor,
            fingerprint: data.fingerprint(),
            nlml,
        })
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn normalization(&self) -> &Normalization<T> {
        &self.normalization
    }

    pub fn jitter_used(&self) -> T {
        self.factor.jitter
    }

    pub fn chol(&self) -> &Cholesky<T> {
        &self.factor.chol
    }

    pub fn alpha(&self) -> &[T] {
        &self.factor.alpha
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// NLML of the centered training targets in target units.
    pub fn nlml_terms(&self) -> NlmlTerms<T> {
        self.nlml
    }

    pub fn nlml(&self) -> T {
        self.nlml.total()
    }

    pub fn n_train(&self) -> usize {
        self.y_train.len()
    }

    pub fn x_train(&self) -> &Matrix<T> {
        &self.x_train
    }

    pub fn y_train(&self) -> &[T] {
        &self.y_train
    }

    /// Predictive mean `ȳ + k_*ᵀα` and variance `k_** − k_*ᵀK̃⁻¹k_*` at raw inputs
    /// `xstar`; `observation_noise` adds `σ_n²`.
    pub fn predict(&self, xstar: &Matrix<T>, observation_noise: bool) -> Result<Prediction<T>> {
        let xs = self.normalization.transform_x(xstar)?;
        if xs.cols() != self.x_train.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.x_train.cols(),
                actual: xs.cols(),
            });
        }
        let kstar = gram(&xs, &self.x_train, &self.kernel)?;
        let prior = self.kernel.signal_variance();
        let noise = if observation_noise {
            self.kernel.noise_var()
        } else {
            T::zero()
        };
        let mut mean = Vec::with_capacity(xs.rows());
        let mut variance = Vec::with_capacity(xs.rows());
        let mut clamped = 0;
        for i in 0..xs.rows() {
            let ks = kstar.row(i);
            let m: T = ks.iter().zip(&self.factor.alpha).map(|(&a, &b)| a * b).sum();
            let v = self.factor.chol.solve_lower(ks);
            let mut var = prior - v.iter().map(|&a| a * a).sum::<T>();
            if var < T::zero() {
                clamped += 1;
                var = T::zero();
            }
            mean.push(self.normalization.y_mean + m);
            variance.push(var + noise);
        }
        Ok(Prediction {
            mean,
            variance,
            clamped,
        })
    }
}

/// Result of hyper-parameter training.
#[derive(Debug, Clone)]
pub struct FitOutcome<T> {
    pub model: TrainedModel<T>,
    /// Optimized kernel on the normalized scale.
    pub normalized_kernel: KernelSpec<T>,
    pub opt: OptResult<T>,
}

/// Minimize the NLML of already-normalized data starting from `init`.
pub fn optimize_kernel<T: Scalar>(
    normalized: &Dataset<T>,
    init: &KernelSpec<T>,
    cfg: &OptConfig,
) -> Result<(KernelSpec<T>, OptResult<T>)> {
    init.check_dim(normalized.dim())?;
    let x0 = init.transformed()?;
    let objective = |x: &[T]| -> Result<(T, Vec<T>)> {
        let k = init.with_transformed(x)?;
        nlml_grad_xy(&k, &normalized.x, &normalized.y)
    };
    let res = minimize(&objective, &x0, cfg)?;
    let kernel = init.with_transformed(&res.x_best)?;
    Ok((kernel, res))
}

/// Train from `init` (normalized scale) and condition the result on `data`.
pub fn fit<T: Scalar>(
    data: &Dataset<T>,
    init: &KernelSpec<T>,
    cfg: &OptConfig,
) -> Result<FitOutcome<T>> {
    let normalization = Normalization::from_data(data);
    let normalized = normalization.apply(data)?;
    let (kernel, opt) = optimize_kernel(&normalized, init, cfg)?;
    let raw = kernel.scale_amplitude(normalization.variance_scale());
    let model = TrainedModel::condition(raw, data, normalization)?;
    Ok(FitOutcome {
        model,
        normalized_kernel: kernel,
        opt,
    })
}
