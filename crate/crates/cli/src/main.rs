//! `slsm`: fit, evaluate and inspect spectral-mixture GP forecasts from CSV files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slsm_core::forecast::artifacts::{
    mixture_rows, prediction_rows, write_mixture_csv, write_predictions_csv, write_spectrum_csv,
    PredictionRow, VarianceMode,
};
use slsm_core::forecast::{mae, mse, read_csv, run_job, ForecastJob};
use slsm_core::gp::{sample_prior, Normalization};
use slsm_core::kernel::{KernelKind, SlsmComponent, SlsmParams};
use slsm_core::optimizer::OptConfig;
use slsm_core::persist::ModelDocument;
use slsm_core::pruning::PruneConfig;
use slsm_core::spectral::{em_mixture, mixture_kind_for, periodogram};
use slsm_core::{Error, ErrorClass, KernelSpec, Matrix, Result};

#[derive(Parser)]
#[command(name = "slsm", version, about = "Gaussian-process forecasting with spectral mixture kernels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on the leading fraction of a series, forecast the rest and write all
    /// artifacts (default directory `slsm-out`).
    Fit(JobArgs),
    /// Score forecasts over one or more seeds; files are written only with `--out`.
    Evaluate(JobArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Draw sample paths from a kernel prior.
    Sample(SampleArgs),
    /// Periodogram and fitted spectral mixture of a series.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct JobArgs {
    /// CSV with columns (y), (t, y) or (x1, .., xP, y).
    input: PathBuf,
    #[arg(long, default_value = "slsm")]
    kernel: KernelKind,
    #[arg(long, default_value_t = 10)]
    q: usize,
    #[arg(long, default_value_t = 0.6)]
    train_frac: f64,
    /// Lottery-ticket pruning of mixture components.
    #[arg(long)]
    prune: bool,
    #[arg(long, default_value_t = 1.0)]
    prune_threshold: f64,
    #[arg(long, default_value_t = 2)]
    rounds: usize,
    /// Train a robust Bayesian committee machine with this many experts.
    #[arg(long)]
    rbcm: Option<usize>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add observation noise to predictive variances.
    #[arg(long)]
    observation_noise: bool,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Output directory for model, predictions, spectrum and metrics files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Saved model (model.json).
    #[arg(long)]
    model: PathBuf,
    /// The CSV the model was trained from; its first rows must match the model.
    input: PathBuf,
    /// Comma-separated input times (univariate models).
    #[arg(long, value_delimiter = ',', conflicts_with = "horizon")]
    at: Option<Vec<f64>>,
    /// Forecast this many steps past the training data.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    observation_noise: bool,
    /// Predictions CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Sample from a saved model's kernel.
    #[arg(long, conflicts_with = "component")]
    model: Option<PathBuf>,
    #[arg(long, default_value = "slsm")]
    kernel: KernelKind,
    /// Component `w,mu,sigma,gamma`, with mu, sigma and gamma in cycles per unit. Repeatable.
    #[arg(long, allow_hyphen_values = true)]
    component: Vec<String>,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 10.0)]
    to: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 3)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    input: PathBuf,
    #[arg(long, default_value = "slsm")]
    kernel: KernelKind,
    #[arg(long, default_value_t = 10)]
    q: usize,
    /// Use only this leading fraction of the series.
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn job_from(a: &JobArgs) -> ForecastJob {
    let opt = OptConfig {
        max_iters: a.max_iters,
        restarts: a.restarts,
        seed: a.seed,
        ..OptConfig::default()
    };
    ForecastJob {
        input: a.input.clone(),
        train_frac: a.train_frac,
        kernel: a.kernel,
        q: a.q,
        seed: a.seed,
        prune: a.prune.then(|| PruneConfig {
            threshold: a.prune_threshold,
            rounds: a.rounds,
            opt,
            ..PruneConfig::default()
        }),
        rbcm: a.rbcm,
        runs: a.runs,
        observation_noise: a.observation_noise,
        out_dir: a.out.clone(),
        opt,
    }
}

fn cmd_job(a: &JobArgs, default_out: Option<&str>) -> Result<()> {
    let mut job = job_from(a);
    if job.out_dir.is_none() {
        job.out_dir = default_out.map(PathBuf::from);
    }
    let report = run_job(&job)?;
    println!("{}", serde_json::to_string_pretty(&report.metrics).map_err(Error::from)?);
    Ok(())
}

fn write_predictions(rows: &[PredictionRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_predictions_csv(p, rows),
        None => {
            let mut s = io::stdout().lock();
            writeln!(s, "t,mean,var,lower95,upper95,variance_mode")?;
            for r in rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    r.t,
                    r.mean,
                    r.var,
                    r.lower95,
                    r.upper95,
                    r.variance_mode.as_str()
                )?;
            }
            Ok(())
        }
    }
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let doc = ModelDocument::<f64>::load(&a.model).map_err(|e| e.context("reading model"))?;
    let data = read_csv(&a.input)?;
    if doc.n_train > data.n() {
        return Err(Error::InvalidData(format!(
            "model was trained on {} rows but the input has {}",
            doc.n_train,
            data.n()
        )));
    }
    let idx: Vec<usize> = (0..doc.n_train).collect();
    let train = data.subset(&idx)?;
    let model = doc.restore(&train)?;

    let (xs, t, truth) = if let Some(at) = &a.at {
        if !data.is_univariate() {
            return Err(Error::InvalidParameter("--at needs a univariate model".into()));
        }
        (Matrix::column(at), at.clone(), None)
    } else if let Some(h) = a.horizon {
        let dt = train.sampling.delta_t.ok_or_else(|| {
            Error::InvalidParameter("--horizon needs a univariate, increasing series".into())
        })?;
        let last = train.x[(train.n() - 1, 0)];
        let t: Vec<f64> = (1..=h).map(|k| last + k as f64 * dt).collect();
        (Matrix::column(&t), t, None)
    } else {
        if doc.n_train == data.n() {
            return Err(Error::InvalidParameter(
                "no rows after the training data; use --at or --horizon".into(),
            ));
        }
        let rest: Vec<usize> = (doc.n_train..data.n()).collect();
        let test = data.subset(&rest)?;
        let t = if data.is_univariate() {
            test.x.col_values(0)
        } else {
            rest.iter().map(|&i| i as f64).collect()
        };
        (test.x.clone(), t, Some(test.y))
    };

    let pred = model.predict(&xs, a.observation_noise)?;
    let rows = prediction_rows(&t, &pred, VarianceMode::from_flag(a.observation_noise));
    write_predictions(&rows, a.out.as_deref())?;
    if let Some(y) = truth {
        eprintln!("mse={} mae={}", mse(&y, &pred.mean)?, mae(&y, &pred.mean)?);
    }
    Ok(())
}

fn parse_component(s: &str) -> Result<SlsmComponent<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidParameter(format!("component '{s}': {e}")))?;
    if v.len() != 4 {
        return Err(Error::InvalidParameter(format!(
            "component '{s}' needs 4 values w,mu,sigma,gamma"
        )));
    }
    let tau = std::f64::consts::TAU;
    SlsmComponent::new(v[0], (v[1] * tau).max(slsm_core::kernel::MIN_FREQ), v[2] * tau, v[3] * tau)
}

fn cmd_sample(a: &SampleArgs) -> Result<()> {
    if a.points == 0 || a.paths == 0 {
        return Err(Error::InvalidParameter("points and paths must be >= 1".into()));
    }
    let (kernel, offset) = match &a.model {
        Some(p) => {
            let doc = ModelDocument::<f64>::load(p)?;
            if !doc.normalization.x_means.is_empty() {
                return Err(Error::InvalidParameter(
                    "sampling supports univariate models only".into(),
                ));
            }
            (doc.kernel()?, doc.normalization.y_mean)
        }
        None => {
            if a.component.is_empty() {
                return Err(Error::InvalidParameter(
                    "give --model or at least one --component".into(),
                ));
            }
            let comps = a
                .component
                .iter()
                .map(|s| parse_component(s))
                .collect::<Result<Vec<_>>>()?;
            let k = KernelSpec::mixture(a.kernel, SlsmParams::new(comps, 0.0)?)?;
            (k, 0.0)
        }
    };
    let step = if a.points > 1 {
        (a.to - a.from) / (a.points - 1) as f64
    } else {
        0.0
    };
    let t: Vec<f64> = (0..a.points).map(|i| a.from + i as f64 * step).collect();
    let paths = sample_prior(&kernel, &Matrix::column(&t), a.paths, a.seed)?;

    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..a.paths).map(|j| format!("path_{j}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (i, ti) in t.iter().enumerate() {
        let mut line = ti.to_string();
        for j in 0..a.paths {
            line.push(',');
            line.push_str(&(paths[(j, i)] + offset).to_string());
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<()> {
    let data = read_csv(&a.input)?;
    let data = match a.train_frac {
        Some(f) if f > 0.0 && f <= 1.0 => {
            let n = ((data.n() as f64) * f).floor() as usize;
            data.subset(&(0..n).collect::<Vec<_>>())?
        }
        Some(f) => {
            return Err(Error::InvalidParameter(format!(
                "train fraction must be in (0, 1], got {f}"
            )))
        }
        None => data,
    };
    let dt = match (data.is_univariate(), data.sampling.uniform, data.sampling.delta_t) {
        (true, true, Some(dt)) => dt,
        (true, _, _) => {
            return Err(Error::NonUniformSampling {
                ratio: data.sampling.gap_ratio,
            })
        }
        _ => {
            return Err(Error::InvalidData(
                "spectrum needs a univariate series".into(),
            ))
        }
    };
    let norm = Normalization::from_data(&data);
    let y = norm.transform_y(&data.y);
    let spec = periodogram(&y, dt)?;
    let fit = em_mixture(&spec, a.q, mixture_kind_for(a.kernel)?, a.seed)?;
    fs::create_dir_all(&a.out)?;
    write_spectrum_csv(&a.out.join("spectrum.csv"), &spec)?;
    write_mixture_csv(&a.out.join("mixture.csv"), &mixture_rows(&spec, &fit))?;
    println!(
        "{} bins, {} components, final log-likelihood {}",
        spec.len(),
        fit.q(),
        fit.final_loglik()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Fit(a) => cmd_job(a, Some("slsm-out")),
        Command::Evaluate(a) => cmd_job(a, None),
        Command::Predict(a) => cmd_predict(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Spectrum(a) => cmd_spectrum(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
