//! Versioned JSON model documents.
//!
//! Documents carry hyper-parameters, normalization and a fingerprint of the
//! training data, not the Cholesky factor: restoring a model re-conditions it on
//! the (verified) training rows.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gp::{Dataset, Normalization, Prediction, TrainedModel};
use crate::kernel::{
    BaselineKernelParams, KernelKind, KernelSpec, MultiSlsmComponent, MultiSlsmParams,
    SlsmComponent, SlsmParams,
};
use crate::linalg::Matrix;
use crate::pruning::PruneReport;
use crate::rbcm::{BetaMode, ExpertEnsemble};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentRecord<T> {
    Scalar {
        w: T,
        mu: T,
        sigma: T,
        gamma: T,
    },
    Vector {
        w: T,
        mu: Vec<T>,
        sigma2: Vec<T>,
        gamma: Vec<T>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertRecord<T> {
    pub indices: Vec<usize>,
    pub jitter_used: T,
    /// Digest of the expert's Cholesky factor.
    pub factor_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument<T> {
    pub schema_version: u32,
    pub kernel_type: KernelKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineKernelParams<T>>,
    pub noise_var: T,
    pub normalization: Normalization<T>,
    pub jitter_used: T,
    pub train_fingerprint: String,
    pub n_train: usize,
    pub nlml: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prune_report: Option<PruneReport<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experts: Option<Vec<ExpertRecord<T>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_mode: Option<BetaMode>,
}

/// A model rebuilt from a document.
#[derive(Debug, Clone)]
pub enum RestoredModel<T> {
    Single(TrainedModel<T>),
    Ensemble(ExpertEnsemble<T>),
}

impl<T: Scalar> RestoredModel<T> {
    pub fn predict(&self, xstar: &Matrix<T>, observation_noise: bool) -> Result<Prediction<T>> {
        match self {
            RestoredModel::Single(m) => m.predict(xstar, observation_noise),
            RestoredModel::Ensemble(e) => e.predict(xstar, observation_noise),
        }
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        match self {
            RestoredModel::Single(m) => m.kernel(),
            RestoredModel::Ensemble(e) => e.kernel(),
        }
    }
}

fn factor_digest<T: Scalar>(m: &TrainedModel<T>) -> String {
    let mut h = Sha256::new();
    for v in m.chol().l().as_slice() {
        h.update(v.to_f64_lossy().to_le_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn kernel_records<T: Scalar>(
    kernel: &KernelSpec<T>,
) -> (Vec<ComponentRecord<T>>, Option<BaselineKernelParams<T>>) {
    match kernel {
        KernelSpec::Mixture { params, .. } => (
            params
                .components
                .iter()
                .map(|c| ComponentRecord::Scalar {
                    w: c.weight,
                    mu: c.freq,
                    sigma: c.scale,
                    gamma: c.skew,
                })
                .collect(),
            None,
        ),
        KernelSpec::MultiMixture { params, .. } => (
            params
                .components
                .iter()
                .map(|c| ComponentRecord::Vector {
                    w: c.weight,
                    mu: c.freq.clone(),
                    sigma2: c.scale_diag.clone(),
                    gamma: c.skew.clone(),
                })
                .collect(),
            None,
        ),
        KernelSpec::Baseline { params, .. } => (Vec::new(), Some(*params)),
    }
}

impl<T: Scalar> ModelDocument<T> {
    pub fn from_model(model: &TrainedModel<T>, prune_report: Option<PruneReport<T>>) -> Self {
        let (components, baseline) = kernel_records(model.kernel());
        Self {
            schema_version: SCHEMA_VERSION,
            kernel_type: model.kernel().kind(),
            components,
            baseline,
            noise_var: model.kernel().noise_var(),
            normalization: model.normalization().clone(),
            jitter_used: model.jitter_used(),
            train_fingerprint: model.fingerprint().to_string(),
            n_train: model.n_train(),
            nlml: model.nlml(),
            prune_report,
            experts: None,
            beta_mode: None,
        }
    }

    pub fn from_ensemble(ens: &ExpertEnsemble<T>) -> Self {
        let (components, baseline) = kernel_records(ens.kernel());
        let experts: Vec<ExpertRecord<T>> = ens
            .subsets()
            .iter()
            .zip(ens.experts())
            .map(|(idx, m)| ExpertRecord {
                indices: idx.clone(),
                jitter_used: m.jitter_used(),
                factor_fingerprint: factor_digest(m),
            })
            .collect();
        let jitter_used = experts
            .iter()
            .map(|e| e.jitter_used)
            .fold(T::zero(), T::max);
        Self {
            schema_version: SCHEMA_VERSION,
            kernel_type: ens.kernel().kind(),
            components,
            baseline,
            noise_var: ens.kernel().noise_var(),
            normalization: ens.normalization().clone(),
            jitter_used,
            train_fingerprint: ens.fingerprint().to_string(),
            n_train: ens.subsets().iter().map(Vec::len).sum(),
            nlml: ens.nlml(),
            prune_report: None,
            experts: Some(experts),
            beta_mode: Some(ens.beta_mode()),
        }
    }

    /// Kernel in target units.
    pub fn kernel(&self) -> Result<KernelSpec<T>> {
        if let Some(b) = &self.baseline {
            return KernelSpec::baseline(*b, self.noise_var);
        }
        if self.components.is_empty() {
            return Err(Error::InvalidData("model document has no components".into()));
        }
        let vector = matches!(self.components[0], ComponentRecord::Vector { .. });
        if vector {
            let comps = self
                .components
                .iter()
                .map(|c| match c {
                    ComponentRecord::Vector {
                        w,
                        mu,
                        sigma2,
                        gamma,
                    } => Ok(MultiSlsmComponent {
                        weight: *w,
                        freq: mu.clone(),
                        scale_diag: sigma2.clone(),
                        skew: gamma.clone(),
                    }),
                    ComponentRecord::Scalar { .. } => Err(Error::InvalidData(
                        "mixed scalar and vector components".into(),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            return KernelSpec::multi_mixture(
                self.kernel_type,
                MultiSlsmParams {
                    components: comps,
                    noise_var: self.noise_var,
                },
            );
        }
        let comps = self
            .components
            .iter()
            .map(|c| match *c {
                ComponentRecord::Scalar { w, mu, sigma, gamma } => Ok(SlsmComponent {
                    weight: w,
                    freq: mu,
                    scale: sigma,
                    skew: gamma,
                }),
                ComponentRecord::Vector { .. } => Err(Error::InvalidData(
                    "mixed scalar and vector components".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        KernelSpec::mixture(
            self.kernel_type,
            SlsmParams {
                components: comps,
                noise_var: self.noise_var,
            },
        )
    }

    /// Re-condition on `train`, which must match the recorded fingerprint.
    pub fn restore(&self, train: &Dataset<T>) -> Result<RestoredModel<T>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidData(format!(
                "unsupported model schema version {}",
                self.schema_version
            )));
        }
        let fp = train.fingerprint();
        if fp != self.train_fingerprint {
            return Err(Error::InvalidData(format!(
                "training data fingerprint {fp} does not match the model ({})",
                self.train_fingerprint
            )));
        }
        let kernel = self.kernel()?;
        match &self.experts {
            None => Ok(RestoredModel::Single(TrainedModel::condition(
                kernel,
                train,
                self.normalization.clone(),
            )?)),
            Some(experts) => Ok(RestoredModel::Ensemble(ExpertEnsemble::from_subsets(
                kernel,
                train,
                experts.iter().map(|e| e.indices.clone()).collect(),
                self.normalization.clone(),
                self.beta_mode.unwrap_or_default(),
            )?)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset<f64> {
        let y = (0..30).map(|i| (i as f64 * 0.37).sin() * 4.0 + 2.0).collect();
        Dataset::regular(y, 1.0).unwrap()
    }

    fn model() -> TrainedModel<f64> {
        let k = KernelSpec::mixture(
            KernelKind::Slsm,
            SlsmParams {
                components: vec![
                    SlsmComponent {
                        weight: 0.1 + 0.2,
                        freq: 1.0 / 3.0,
                        scale: std::f64::consts::PI / 7.0,
                        skew: -1e-17,
                    },
                    SlsmComponent {
                        weight: 12345.678901234567,
                        freq: 2.0f64.sqrt(),
                        scale: 1e-7,
                        skew: 0.3,
                    },
                ],
                noise_var: 0.123456789012345,
            },
        )
        .unwrap();
        let d = data();
        TrainedModel::condition(k, &d, Normalization::from_data(&d)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let doc = ModelDocument::from_model(&model(), None);
        let back = ModelDocument::<f64>::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(doc, back);
        assert_eq!(back.kernel().unwrap(), *model().kernel());
    }

    #[test]
    fn restore_checks_fingerprint() {
        let m = model();
        let doc = ModelDocument::from_model(&m, None);
        let restored = doc.restore(&data()).unwrap();
        let xs = Matrix::column(&[31.0, 40.5]);
        let a = m.predict(&xs, false).unwrap();
        let b = restored.predict(&xs, false).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.variance, b.variance);

        let mut other = data();
        other.y[3] += 1.0;
        assert!(doc.restore(&other).is_err());
    }

    #[test]
    fn vector_components_round_trip() {
        let k = KernelSpec::multi_mixture(
            KernelKind::Sm,
            MultiSlsmParams {
                components: vec![MultiSlsmComponent {
                    weight: 1.5,
                    freq: vec![0.1, 0.2],
                    scale_diag: vec![0.3, 0.4],
                    skew: vec![0.0, 0.0],
                }],
                noise_var: 0.01,
            },
        )
        .unwrap();
        let x = Matrix::from_fn(10, 2, |i, j| (i * (j + 1)) as f64 * 0.3);
        let d = Dataset::new(x, (0..10).map(|i| i as f64).collect()).unwrap();
        let m = TrainedModel::condition(k.clone(), &d, Normalization::from_data(&d)).unwrap();
        let doc = ModelDocument::from_model(&m, None);
        let json = doc.to_json().unwrap();
        assert!(json.contains("sigma2"));
        let back = ModelDocument::<f64>::from_json(&json).unwrap();
        assert_eq!(back.kernel().unwrap(), k);
    }
}
