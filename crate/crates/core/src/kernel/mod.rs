//! Stationary covariance functions: skewed Laplace, Gaussian and Laplace spectral
//! mixtures, plus SE and RQ baselines.

mod baseline;
mod density;
mod gram;
mod multi;
mod slsm;
mod spec;

pub use baseline::{baseline_kernel, BaselineKernelParams, BaselineVariant};
pub use density::{mixture_density, skewed_laplace_density, sm_spectral_density, spectral_density};
pub use gram::{gram, gram_symmetric};
pub use multi::{slsm_kernel_multi, sm_kernel_multi, MultiSlsmComponent, MultiSlsmParams};
pub use slsm::{
    lkp_kernel, slsm_component, slsm_kernel, slsm_kernel_grad, sm_component, sm_kernel,
    sm_kernel_grad, ComponentPartials, SlsmComponent, SlsmParams, MIN_FREQ,
};
pub use spec::{KernelKind, KernelSpec};
