//! CSV ingestion, accuracy metrics, and the end-to-end forecasting job.

pub mod artifacts;
mod ingest;
mod job;
pub mod metrics;

pub use ingest::{parse_csv, read_csv};
pub use job::{
    evaluate_dataset, run_job, write_artifacts, ArtifactPaths, ForecastJob, JobReport,
    MetricsReport, RunMetrics, RunResult, Stat,
};
pub use metrics::{mae, mse, smse};
