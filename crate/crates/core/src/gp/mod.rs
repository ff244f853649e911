//! Exact Gaussian-process regression.

mod dataset;
mod inference;
mod model;
mod sample;

pub use dataset::{Dataset, Sampling, UNIFORM_GAP_TOL};
pub use inference::{factorize, nlml, nlml_grad, nlml_terms, Factorization, NlmlTerms};
pub use model::{fit, optimize_kernel, FitOutcome, Normalization, Prediction, TrainedModel};
pub use sample::sample_prior;

