//! Gaussian-process time-series forecasting with skewed Laplace spectral mixture
//! (SLSM) kernels.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the double-precision types used by the forecasting pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forecast;
pub mod gp;
pub mod kernel;
pub mod linalg;
pub mod optimizer;
pub mod persist;
pub mod pruning;
pub mod rbcm;
pub mod scalar;
pub mod spectral;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Scalar;

pub type SlsmComponent = kernel::SlsmComponent<f64>;
pub type SlsmParams = kernel::SlsmParams<f64>;
pub type MultiSlsmComponent = kernel::MultiSlsmComponent<f64>;
pub type MultiSlsmParams = kernel::MultiSlsmParams<f64>;
pub type BaselineKernelParams = kernel::BaselineKernelParams<f64>;
pub type KernelSpec = kernel::KernelSpec<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type Dataset = gp::Dataset<f64>;
pub type TrainedModel = gp::TrainedModel<f64>;
pub type Prediction = gp::Prediction<f64>;
pub type SpectrumEstimate = spectral::SpectrumEstimate<f64>;
pub type MixtureFit = spectral::MixtureFit<f64>;
pub type ExpertEnsemble = rbcm::ExpertEnsemble<f64>;

pub type SlsmParamsF32 = kernel::SlsmParams<f32>;
pub type KernelSpecF32 = kernel::KernelSpec<f32>;
