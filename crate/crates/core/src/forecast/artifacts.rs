//! Plot-ready CSV files and their readers.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::Prediction;
use crate::spectral::{MixtureFit, SpectrumEstimate};

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Variance of the latent function.
    Latent,
    /// Latent variance plus observation noise.
    Observation,
}

impl VarianceMode {
    pub fn from_flag(observation_noise: bool) -> Self {
        if observation_noise {
            VarianceMode::Observation
        } else {
            VarianceMode::Latent
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VarianceMode::Latent => "latent",
            VarianceMode::Observation => "observation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub t: f64,
    pub mean: f64,
    pub var: f64,
    pub lower95: f64,
    pub upper95: f64,
    pub variance_mode: VarianceMode,
}

pub fn prediction_rows(t: &[f64], p: &Prediction<f64>, mode: VarianceMode) -> Vec<PredictionRow> {
    t.iter()
        .zip(p.mean.iter().zip(&p.variance))
        .map(|(&t, (&mean, &var))| {
            let half = Z95 * var.sqrt();
            PredictionRow {
                t,
                mean,
                var,
                lower95: mean - half,
                upper95: mean + half,
                variance_mode: mode,
            }
        })
        .collect()
}

fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<S: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<S>> {
    let mut r = csv::Reader::from_reader(File::open(path)?);
    let rows = r.deserialize().collect::<std::result::Result<Vec<S>, _>>()?;
    Ok(rows)
}

pub fn write_predictions_csv(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRow>> {
    read_rows(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// Angular frequency (radians per input unit).
    pub freq: f64,
    /// Same frequency in cycles per input unit.
    pub freq_cycles: f64,
    pub power: f64,
}

pub fn write_spectrum_csv(path: &Path, spec: &SpectrumEstimate<f64>) -> Result<()> {
    let rows: Vec<SpectrumRow> = spec
        .freqs
        .iter()
        .zip(&spec.powers)
        .map(|(&freq, &power)| SpectrumRow {
            freq,
            freq_cycles: freq / std::f64::consts::TAU,
            power,
        })
        .collect();
    write_rows(path, &rows)
}

pub fn read_spectrum_csv(path: &Path) -> Result<SpectrumEstimate<f64>> {
    let rows: Vec<SpectrumRow> = read_rows(path)?;
    if rows.len() < 2 {
        return Err(Error::InvalidData("spectrum file has fewer than two bins".into()));
    }
    let dw = rows[1].freq - rows[0].freq;
    let n = (rows.len() as f64) * 2.0;
    Ok(SpectrumEstimate {
        freqs: rows.iter().map(|r| r.freq).collect(),
        powers: rows.iter().map(|r| r.power).collect(),
        delta_t: std::f64::consts::TAU / (n * dw),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRow {
    pub freq: f64,
    /// Fitted mixture density (integrates to one).
    pub density: f64,
    /// Density rescaled to the periodogram's total power, for overlays.
    pub scaled: f64,
}

/// Mixture overlay evaluated on the periodogram grid.
pub fn mixture_rows(spec: &SpectrumEstimate<f64>, fit: &MixtureFit<f64>) -> Vec<MixtureRow> {
    let mass = spec.total_power() * spec.bin_width();
    spec.freqs
        .iter()
        .map(|&freq| {
            let density = fit.density(freq);
            MixtureRow {
                freq,
                density,
                scaled: density * mass,
            }
        })
        .collect()
}

pub fn write_mixture_csv(path: &Path, rows: &[MixtureRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_mixture_csv(path: &Path) -> Result<Vec<MixtureRow>> {
    read_rows(path)
}
