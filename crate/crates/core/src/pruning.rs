//! Lottery-ticket component pruning: train, drop low-weight components, rewind
//! the survivors to their initial values and retrain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{optimize_kernel, Dataset, FitOutcome, Normalization, TrainedModel};
use crate::kernel::KernelSpec;
use crate::optimizer::{OptConfig, OptResult};
use crate::scalar::Scalar;

/// What is rewound for surviving components between rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetScope {
    /// Weight, frequency, scale and skew.
    #[default]
    All,
    /// Only the weight; other hyper-parameters keep their trained values.
    WeightsOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneConfig {
    /// Threshold on component weights in target-variance units.
    pub threshold: f64,
    pub rounds: usize,
    /// Budget for every training pass (the initial one and each retrain).
    pub opt: OptConfig,
    pub reset: ResetScope,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            threshold: 1.0,
            rounds: 2,
            opt: OptConfig::default(),
            reset: ResetScope::All,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "prune threshold must be >= 0, got {}",
                self.threshold
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("prune rounds must be >= 1".into()));
        }
        self.opt.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedComponent<T> {
    /// Index in the initial (unpruned) component list.
    pub index: usize,
    /// Trained weight in target-variance units.
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneRound<T> {
    pub round: usize,
    pub pruned: Vec<PrunedComponent<T>>,
    /// NLML (target units) of the model entering the round.
    pub nlml_before: T,
    /// NLML after retraining the survivors.
    pub nlml_after: T,
    pub surviving_q: usize,
    /// Every weight fell below the threshold and the largest was kept anyway.
    #[serde(default)]
    pub kept_largest: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport<T> {
    pub threshold: T,
    pub reset: ResetScope,
    pub initial_q: usize,
    pub rounds: Vec<PruneRound<T>>,
    /// Initial indices of the final components.
    pub surviving: Vec<usize>,
}

impl<T: Scalar> PruneReport<T> {
    pub fn final_q(&self) -> usize {
        self.surviving.len()
    }

    pub fn total_pruned(&self) -> usize {
        self.rounds.iter().map(|r| r.pruned.len()).sum()
    }

    pub fn mean_pruned_per_round(&self) -> f64 {
        if self.rounds.is_empty() {
            0.0
        } else {
            self.total_pruned() as f64 / self.rounds.len() as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct LthOutcome<T> {
    pub fit: FitOutcome<T>,
    pub report: PruneReport<T>,
    /// Starting point of every training pass on the normalized scale; entry 0 is
    /// the recorded initialization.
    pub round_inits: Vec<KernelSpec<T>>,
}

/// Index of the largest weight (first one on ties).
fn argmax<T: Scalar>(w: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in w.iter().enumerate() {
        if v > w[best] {
            best = i;
        }
    }
    best
}

/// Prune `init` (normalized scale) on `data` over `cfg.rounds` rounds.
pub fn lth_fit<T: Scalar>(
    data: &Dataset<T>,
    init: &KernelSpec<T>,
    cfg: &PruneConfig,
) -> Result<LthOutcome<T>> {
    cfg.validate()?;
    if init.kind().is_spectral() {
        init.validate()?;
    } else {
        return Err(Error::InvalidParameter(
            "pruning needs a spectral mixture kernel".into(),
        ));
    }
    let normalization = Normalization::from_data(data);
    let normalized = normalization.apply(data)?;
    let var_scale = normalization.variance_scale();
    // NLML of raw targets differs from the normalized one by n·ln(y_std).
    let shift = T::from_usize_lossy(data.n()) * normalization.y_std.ln();
    let threshold = T::lit(cfg.threshold);

    let mut round_inits = vec![init.clone()];
    let (mut kernel, mut opt): (KernelSpec<T>, OptResult<T>) =
        optimize_kernel(&normalized, init, &cfg.opt)?;
    let mut alive: Vec<usize> = (0..init.n_components()).collect();
    let mut rounds = Vec::with_capacity(cfg.rounds);

    for round in 1..=cfg.rounds {
        let weights: Vec<T> = kernel
            .component_weights()
            .into_iter()
            .map(|w| w * var_scale)
            .collect();
        let mut keep: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] >= threshold).collect();
        let kept_largest = keep.is_empty();
        if kept_largest {
            keep.push(argmax(&weights));
        }
        let pruned = (0..weights.len())
            .filter(|i| !keep.contains(i))
            .map(|i| PrunedComponent {
                index: alive[i],
                weight: weights[i],
            })
            .collect();
        let survivors: Vec<usize> = keep.iter().map(|&i| alive[i]).collect();

        let mut start = match cfg.reset {
            ResetScope::All => init.select_components(&survivors)?,
            ResetScope::WeightsOnly => {
                let mut k = kernel.select_components(&keep)?;
                let w0 = init.component_weights();
                for (slot, &orig) in survivors.iter().enumerate() {
                    k.set_component_weight(slot, w0[orig]);
                }
                k
            }
        };
        start.set_noise_var(kernel.noise_var());

        let nlml_before = opt.f_best + shift;
        let (k, o) = optimize_kernel(&normalized, &start, &cfg.opt)?;
        round_inits.push(start);
        kernel = k;
        opt = o;
        alive = survivors;
        rounds.push(PruneRound {
            round,
            pruned,
            nlml_before,
            nlml_after: opt.f_best + shift,
            surviving_q: alive.len(),
            kept_largest,
        });
    }

    let raw = kernel.scale_amplitude(var_scale);
    let model = TrainedModel::condition(raw, data, normalization)?;
    Ok(LthOutcome {
        fit: FitOutcome {
            model,
            normalized_kernel: kernel,
            opt,
        },
        report: PruneReport {
            threshold,
            reset: cfg.reset,
            initial_q: init.n_components(),
            rounds,
            surviving: alive,
        },
        round_inits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelKind, SlsmComponent, SlsmParams};

    fn data() -> Dataset<f64> {
        let y = (0..40)
            .map(|i| {
                let t = i as f64;
                20.0 * (0.5 * t).sin() + 3.0 * (1.7 * t).cos()
            })
            .collect();
        Dataset::regular(y, 1.0).unwrap()
    }

    fn init() -> KernelSpec<f64> {
        let comps = [(0.5, 0.5), (0.3, 1.7), (0.1, 2.5), (0.1, 0.1)]
            .iter()
            .map(|&(w, mu)| SlsmComponent {
                weight: w,
                freq: mu,
                scale: 0.1,
                skew: 0.2,
            })
            .collect();
        KernelSpec::mixture(
            KernelKind::Slsm,
            SlsmParams {
                components: comps,
                noise_var: 0.1,
            },
        )
        .unwrap()
    }

    fn cfg(threshold: f64) -> PruneConfig {
        PruneConfig {
            threshold,
            rounds: 2,
            opt: OptConfig {
                max_iters: 15,
                ..OptConfig::default()
            },
            reset: ResetScope::All,
        }
    }

    #[test]
    fn zero_threshold_prunes_nothing() {
        let out = lth_fit(&data(), &init(), &cfg(0.0)).unwrap();
        assert_eq!(out.report.final_q(), 4);
        assert!(out.report.rounds.iter().all(|r| r.pruned.is_empty()));
        assert_eq!(out.round_inits.len(), 3);
    }

    #[test]
    fn survivors_rewind_to_recorded_values() {
        let out = lth_fit(&data(), &init(), &cfg(5.0)).unwrap();
        let KernelSpec::Mixture { params: p0, .. } = &out.round_inits[0] else {
            panic!()
        };
        let mut alive: Vec<usize> = (0..4).collect();
        for (r, start) in out.report.rounds.iter().zip(&out.round_inits[1..]) {
            let gone: Vec<usize> = r.pruned.iter().map(|p| p.index).collect();
            alive.retain(|i| !gone.contains(i));
            let KernelSpec::Mixture { params, .. } = start else {
                panic!()
            };
            assert_eq!(params.q(), alive.len());
            for (c, &orig) in params.components.iter().zip(&alive) {
                assert_eq!(*c, p0.components[orig]);
            }
        }
        assert_eq!(alive, out.report.surviving);
        let qs: Vec<usize> = out.report.rounds.iter().map(|r| r.surviving_q).collect();
        assert!(qs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn everything_below_threshold_keeps_largest() {
        let out = lth_fit(&data(), &init(), &cfg(1e9)).unwrap();
        assert_eq!(out.report.final_q(), 1);
        assert!(out.report.rounds[0].kept_largest);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg(1.0);
        c.rounds = 0;
        assert!(lth_fit(&data(), &init(), &c).is_err());
        assert!(lth_fit(&data(), &init(), &cfg(-1.0)).is_err());
    }
}
