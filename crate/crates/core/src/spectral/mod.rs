//! Periodogram estimation and mixture-model initialization of spectral kernels.

mod em;
mod init;
mod periodogram;

pub use em::{
    em_mixture, em_mixture_with, EmConfig, MixtureComponent, MixtureFit, MixtureKind,
};
pub use init::{
    baseline_init, init_params, initial_kernel, mixture_kind_for, random_init, InitSource,
    INIT_NOISE_FRACTION,
};
pub use periodogram::{periodogram, periodogram_from_times, SpectrumEstimate};
