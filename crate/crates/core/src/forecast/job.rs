use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{
    mixture_rows, prediction_rows, write_mixture_csv, write_predictions_csv, write_spectrum_csv,
    VarianceMode,
};
use super::ingest::read_csv;
use super::metrics::{mae, mse, smse};
use crate::error::{Error, Result, ResultExt};
use crate::gp::{fit, Dataset, Normalization, Prediction};
use crate::kernel::KernelKind;
use crate::optimizer::{write_trace_csv, OptConfig, OptResult};
use crate::persist::ModelDocument;
use crate::pruning::{lth_fit, PruneConfig};
use crate::rbcm::{rbcm_fit, RbcmConfig};
use crate::spectral::{initial_kernel, InitSource};

/// One forecasting experiment: chronological split, initialization, training,
/// and test-set scoring, optionally repeated over several seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastJob {
    pub input: PathBuf,
    pub train_frac: f64,
    pub kernel: KernelKind,
    pub q: usize,
    pub seed: u64,
    pub prune: Option<PruneConfig>,
    /// Number of rBCM experts.
    pub rbcm: Option<usize>,
    pub runs: usize,
    pub observation_noise: bool,
    pub out_dir: Option<PathBuf>,
    pub opt: OptConfig,
}

impl ForecastJob {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            train_frac: 0.6,
            kernel: KernelKind::Slsm,
            q: 10,
            seed: 0,
            prune: None,
            rbcm: None,
            runs: 1,
            observation_noise: false,
            out_dir: None,
            opt: OptConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must be in (0, 1), got {}",
                self.train_frac
            )));
        }
        if self.q == 0 {
            return Err(Error::InvalidParameter("Q must be >= 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if self.prune.is_some() && self.rbcm.is_some() {
            return Err(Error::InvalidParameter(
                "pruning and rBCM cannot be combined".into(),
            ));
        }
        if self.prune.is_some() && !self.kernel.is_spectral() {
            return Err(Error::InvalidParameter(format!(
                "pruning needs a spectral mixture kernel, not {}",
                self.kernel
            )));
        }
        if let Some(p) = &self.prune {
            p.validate()?;
        }
        if self.rbcm == Some(0) {
            return Err(Error::InvalidParameter("rBCM needs at least one expert".into()));
        }
        self.opt.validate()
    }

    /// Number of training rows: `⌊n·train_frac⌋`.
    pub fn n_train(&self, n: usize) -> usize {
        (n as f64 * self.train_frac).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub mse: f64,
    pub mae: f64,
    pub smse: f64,
    pub nlml: f64,
    /// Components in the final model.
    pub q: usize,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: RunMetrics,
    pub runtime_ms: f64,
    pub model: ModelDocument<f64>,
    pub prediction: Prediction<f64>,
    pub init: InitSource<f64>,
    pub opt: OptResult<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(v: &[f64]) -> Self {
        let n = v.len().max(1) as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kernel: KernelKind,
    pub q: usize,
    pub seed: u64,
    pub runs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub mse: Stat,
    pub mae: Stat,
    pub smse: Stat,
    pub nlml: Stat,
    /// Surviving component count (equals `q` without pruning).
    pub pruned_q: Stat,
    pub per_run: Vec<RunMetrics>,
    /// Wall-clock time of all runs; the only non-deterministic field.
    pub runtime_ms: f64,
}

#[derive(Debug, Clone)]
pub struct JobReport {
    pub metrics: MetricsReport,
    pub runs: Vec<RunResult>,
    /// Time (first input column) or row number of every test point.
    pub test_t: Vec<f64>,
    pub test_y: Vec<f64>,
}

fn run_once(job: &ForecastJob, train: &Dataset<f64>, test: &Dataset<f64>, seed: u64) -> Result<RunResult> {
    let start = Instant::now();
    let normalization = Normalization::from_data(train);
    let normalized = normalization.apply(train)?;
    let (init, source) = initial_kernel(&normalized, job.kernel, job.q, seed)
        .context("initialization")?;
    let opt_cfg = OptConfig {
        seed,
        ..job.opt
    };

    let (model, prediction, opt) = if let Some(p) = &job.prune {
        let cfg = PruneConfig {
            opt: opt_cfg,
            ..p.clone()
        };
        let out = lth_fit(train, &init, &cfg).context("pruned training")?;
        let pred = out.fit.model.predict(&test.x, job.observation_noise)?;
        let doc = ModelDocument::from_model(&out.fit.model, Some(out.report));
        (doc, pred, out.fit.opt)
    } else if let Some(m) = job.rbcm {
        let cfg = RbcmConfig {
            opt: opt_cfg,
            ..RbcmConfig::new(m)
        };
        let (ens, opt) = rbcm_fit(train, &init, &cfg).context("rBCM training")?;
        let pred = ens.predict(&test.x, job.observation_noise)?;
        (ModelDocument::from_ensemble(&ens), pred, opt)
    } else {
        let out = fit(train, &init, &opt_cfg).context("training")?;
        let pred = out.model.predict(&test.x, job.observation_noise)?;
        (ModelDocument::from_model(&out.model, None), pred, out.opt)
    };

    let q = model
        .components
        .len()
        .max(usize::from(model.baseline.is_some()));
    let metrics = RunMetrics {
        seed,
        mse: mse(&test.y, &prediction.mean)?,
        mae: mae(&test.y, &prediction.mean)?,
        smse: smse(&test.y, &prediction.mean).context("test metrics")?,
        nlml: model.nlml,
        q,
    };
    Ok(RunResult {
        metrics,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        model,
        prediction,
        init: source,
        opt,
    })
}

/// Run `job` on an in-memory dataset without writing files.
pub fn evaluate_dataset(job: &ForecastJob, data: &Dataset<f64>) -> Result<JobReport> {
    job.validate()?;
    let n_train = job.n_train(data.n());
    let (train, test) = data.split_at(n_train).context("train/test split")?;
    let started = Instant::now();
    let runs = (0..job.runs)
        .into_par_iter()
        .map(|r| {
            let seed = job.seed.wrapping_add(r as u64);
            run_once(job, &train, &test, seed).context(&format!("run {r} (seed {seed})"))
        })
        .collect::<Result<Vec<_>>>()?;
    let runtime_ms = started.elapsed().as_secs_f64() * 1e3;

    let pick = |f: fn(&RunMetrics) -> f64| -> Stat {
        Stat::of(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    let metrics = MetricsReport {
        kernel: job.kernel,
        q: job.q,
        seed: job.seed,
        runs: job.runs,
        n_train: train.n(),
        n_test: test.n(),
        mse: pick(|m| m.mse),
        mae: pick(|m| m.mae),
        smse: pick(|m| m.smse),
        nlml: pick(|m| m.nlml),
        pruned_q: pick(|m| m.q as f64),
        per_run: runs.iter().map(|r| r.metrics).collect(),
        runtime_ms,
    };
    let test_t = if data.is_univariate() {
        test.x.col_values(0)
    } else {
        (n_train..data.n()).map(|i| i as f64).collect()
    };
    Ok(JobReport {
        metrics,
        runs,
        test_t,
        test_y: test.y,
    })
}

/// Files produced by [`write_artifacts`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactPaths {
    pub model: PathBuf,
    pub predictions: PathBuf,
    pub metrics: PathBuf,
    pub trace: PathBuf,
    pub spectrum: Option<PathBuf>,
    pub mixture: Option<PathBuf>,
}

/// Write the first run's model, predictions, trace and spectrum files plus the
/// merged metrics into `dir`.
pub fn write_artifacts(
    report: &JobReport,
    observation_noise: bool,
    dir: &Path,
) -> Result<ArtifactPaths> {
    fs::create_dir_all(dir)?;
    let first = &report.runs[0];
    let paths = ArtifactPaths {
        model: dir.join("model.json"),
        predictions: dir.join("predictions.csv"),
        metrics: dir.join("metrics.json"),
        trace: dir.join("trace.csv"),
        spectrum: None,
        mixture: None,
    };
    first.model.save(&paths.model)?;
    let rows = prediction_rows(
        &report.test_t,
        &first.prediction,
        VarianceMode::from_flag(observation_noise),
    );
    write_predictions_csv(&paths.predictions, &rows)?;
    write_trace_csv(fs::File::create(&paths.trace)?, &first.opt.trace)?;
    fs::write(
        &paths.metrics,
        serde_json::to_string_pretty(&report.metrics)? + "\n",
    )?;
    let mut paths = paths;
    if let InitSource::Spectral { spectrum, mixture } = &first.init {
        let s = dir.join("spectrum.csv");
        let m = dir.join("mixture.csv");
        write_spectrum_csv(&s, spectrum)?;
        write_mixture_csv(&m, &mixture_rows(spectrum, mixture))?;
        paths.spectrum = Some(s);
        paths.mixture = Some(m);
    }
    Ok(paths)
}

/// Read the input, evaluate, and write artifacts when an output directory is set.
pub fn run_job(job: &ForecastJob) -> Result<JobReport> {
    job.validate()?;
    let data = read_csv(&job.input).context("reading input")?;
    let report = evaluate_dataset(job, &data)?;
    if let Some(dir) = &job.out_dir {
        write_artifacts(&report, job.observation_noise, dir).context("writing artifacts")?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_uses_population_std() {
        let s = Stat::of(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Stat::of(&[5.0]).std, 0.0);
    }

    #[test]
    fn split_is_floored() {
        let mut job = ForecastJob::new("x.csv");
        job.train_frac = 0.6;
        assert_eq!(job.n_train(144), 86);
        job.train_frac = 96.0 / 144.0;
        assert_eq!(job.n_train(144), 96);
    }

    #[test]
    fn invalid_jobs() {
        let mut job = ForecastJob::new("x.csv");
        job.train_frac = 1.0;
        assert!(job.validate().is_err());
        let mut job = ForecastJob::new("x.csv");
        job.prune = Some(PruneConfig::default());
        job.rbcm = Some(2);
        assert!(job.validate().is_err());
        let mut job = ForecastJob::new("x.csv");
        job.q = 0;
        assert!(job.validate().is_err());
    }

    #[test]
    fn small_job_end_to_end() {
        let y: Vec<f64> = (0..40)
            .map(|i| {
                let t = i as f64;
                5.0 + 2.0 * (0.6 * t).sin() + 0.05 * t
            })
            .collect();
        let data = Dataset::regular(y, 1.0).unwrap();
        let mut job = ForecastJob::new("unused.csv");
        job.q = 2;
        job.runs = 2;
        job.opt.max_iters = 20;
        let rep = evaluate_dataset(&job, &data).unwrap();
        assert_eq!(rep.metrics.n_train, 24);
        assert_eq!(rep.metrics.n_test, 16);
        assert_eq!(rep.metrics.per_run.len(), 2);
        assert!(rep.test_t[0] > 23.0);
        let m = &rep.metrics.per_run[0];
        assert!(m.mae * m.mae <= m.mse + 1e-12);
    }
}
