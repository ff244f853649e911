//! A kernel family plus its parameters, with the flat transformed view used for training.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::baseline::{BaselineKernelParams, BaselineVariant};
use super::multi::{
    multi_partials_transformed, slsm_multi_unchecked, sm_multi_unchecked, MultiSlsmComponent,
    MultiSlsmParams,
};
use super::slsm::{
    slsm_component, slsm_component_partials, sm_component, SlsmComponent, SlsmParams,
};
use crate::error::{Error, Result};
use crate::optimizer::transform::TransformedParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Slsm,
    Sm,
    Lkp,
    Se,
    Rq,
}

impl KernelKind {
    pub fn is_spectral(self) -> bool {
        matches!(self, KernelKind::Slsm | KernelKind::Sm | KernelKind::Lkp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Slsm => "slsm",
            KernelKind::Sm => "sm",
            KernelKind::Lkp => "lkp",
            KernelKind::Se => "se",
            KernelKind::Rq => "rq",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "slsm" => Ok(KernelKind::Slsm),
            "sm" => Ok(KernelKind::Sm),
            "lkp" => Ok(KernelKind::Lkp),
            "se" => Ok(KernelKind::Se),
            "rq" => Ok(KernelKind::Rq),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Kernel family together with its hyper-parameters (including observation noise).
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec<T> {
    /// Univariate spectral mixture; `kind` is one of SLSM, SM, LKP.
    Mixture {
        kind: KernelKind,
        params: SlsmParams<T>,
    },
    /// Multivariate spectral mixture with diagonal frequency covariance.
    MultiMixture {
        kind: KernelKind,
        params: MultiSlsmParams<T>,
    },
    Baseline {
        params: BaselineKernelParams<T>,
        noise_var: T,
    },
}

impl<T: Scalar> KernelSpec<T> {
    pub fn mixture(kind: KernelKind, mut params: SlsmParams<T>) -> Result<Self> {
        if !kind.is_spectral() {
            return Err(Error::InvalidParameter(format!(
                "{kind} is not a spectral mixture kernel"
            )));
        }
        params.validate()?;
        if kind != KernelKind::Slsm {
            params = params.without_skew();
        }
        Ok(KernelSpec::Mixture { kind, params })
    }

    pub fn multi_mixture(kind: KernelKind, mut params: MultiSlsmParams<T>) -> Result<Self> {
        if !kind.is_spectral() {
            return Err(Error::InvalidParameter(format!(
                "{kind} is not a spectral mixture kernel"
            )));
        }
        params.validate()?;
        if kind != KernelKind::Slsm {
            for c in &mut params.components {
                c.skew.iter_mut().for_each(|g| *g = T::zero());
            }
        }
        Ok(KernelSpec::MultiMixture { kind, params })
    }

    pub fn baseline(params: BaselineKernelParams<T>, noise_var: T) -> Result<Self> {
        params.validate()?;
        if !(noise_var >= T::zero()) {
            return Err(Error::InvalidParameter("noise variance must be >= 0".into()));
        }
        Ok(KernelSpec::Baseline { params, noise_var })
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Mixture { kind, .. } | KernelSpec::MultiMixture { kind, .. } => *kind,
            KernelSpec::Baseline { params, .. } => match params.variant {
                BaselineVariant::Se => KernelKind::Se,
                BaselineVariant::Rq => KernelKind::Rq,
            },
        }
    }

    /// Input dimension the kernel is tied to; `None` for isotropic baselines.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            KernelSpec::Mixture { .. } => Some(1),
            KernelSpec::MultiMixture { params, .. } => Some(params.dim()),
            KernelSpec::Baseline { .. } => None,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.input_dim() {
            Some(d) if d != dim => Err(Error::DimensionMismatch {
                expected: d,
                actual: dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn noise_var(&self) -> T {
        match self {
            KernelSpec::Mixture { params, .. } => params.noise_var,
            KernelSpec::MultiMixture { params, .. } => params.noise_var,
            KernelSpec::Baseline { noise_var, .. } => *noise_var,
        }
    }

    pub fn set_noise_var(&mut self, v: T) {
        match self {
            KernelSpec::Mixture { params, .. } => params.noise_var = v,
            KernelSpec::MultiMixture { params, .. } => params.noise_var = v,
            KernelSpec::Baseline { noise_var, .. } => *noise_var = v,
        }
    }

    /// Covariance at lag vector `lag` (noise excluded). The lag length must match the
    /// kernel's input dimension.
    #[inline]
    pub fn eval(&self, lag: &[T]) -> T {
        match self {
            KernelSpec::Mixture { kind, params } => {
                let tau = lag[0];
                match kind {
                    KernelKind::Sm => params
                        .components
                        .iter()
                        .map(|c| c.weight * sm_component(tau, c))
                        .sum(),
                    _ => params
                        .components
                        .iter()
                        .map(|c| c.weight * slsm_component(tau, c))
                        .sum(),
                }
            }
            KernelSpec::MultiMixture { kind, params } => match kind {
                KernelKind::Sm => params
                    .components
                    .iter()
                    .map(|c| c.weight * sm_multi_unchecked(lag, c))
                    .sum(),
                _ => params
                    .components
                    .iter()
                    .map(|c| c.weight * slsm_multi_unchecked(lag, c))
                    .sum(),
            },
            KernelSpec::Baseline { params, .. } => {
                params.eval_sq(lag.iter().map(|&t| t * t).sum())
            }
        }
    }

    /// Scalar-lag evaluation for univariate kernels.
    pub fn eval_scalar(&self, tau: T) -> T {
        self.eval(&[tau])
    }

    /// Prior variance `k(0)` (noise excluded).
    pub fn signal_variance(&self) -> T {
        let zeros = vec![T::zero(); self.input_dim().unwrap_or(1)];
        self.eval(&zeros)
    }

    pub fn n_components(&self) -> usize {
        match self {
            KernelSpec::Mixture { params, .. } => params.q(),
            KernelSpec::MultiMixture { params, .. } => params.components.len(),
            KernelSpec::Baseline { .. } => 1,
        }
    }

    pub fn component_weights(&self) -> Vec<T> {
        match self {
            KernelSpec::Mixture { params, .. } => {
                params.components.iter().map(|c| c.weight).collect()
            }
            KernelSpec::MultiMixture { params, .. } => {
                params.components.iter().map(|c| c.weight).collect()
            }
            KernelSpec::Baseline { params, .. } => vec![params.amplitude],
        }
    }

    /// Keep only the listed components (in the given order).
    pub fn select_components(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one component must survive".into(),
            ));
        }
        let n = self.n_components();
        if let Some(&bad) = keep.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidParameter(format!(
                "component index {bad} out of range for Q={n}"
            )));
        }
        match self {
            KernelSpec::Mixture { kind, params } => Ok(KernelSpec::Mixture {
                kind: *kind,
                params: SlsmParams {
                    components: keep.iter().map(|&i| params.components[i]).collect(),
                    noise_var: params.noise_var,
                },
            }),
            KernelSpec::MultiMixture { kind, params } => Ok(KernelSpec::MultiMixture {
                kind: *kind,
                params: MultiSlsmParams {
                    components: keep.iter().map(|&i| params.components[i].clone()).collect(),
                    noise_var: params.noise_var,
                },
            }),
            KernelSpec::Baseline { .. } => Err(Error::InvalidParameter(
                "baseline kernels have no separable components".into(),
            )),
        }
    }

    /// Overwrite the weight of component `i`.
    pub fn set_component_weight(&mut self, i: usize, w: T) {
        match self {
            KernelSpec::Mixture { params, .. } => params.components[i].weight = w,
            KernelSpec::MultiMixture { params, .. } => params.components[i].weight = w,
            KernelSpec::Baseline { params, .. } => params.amplitude = w,
        }
    }

    /// Multiply every signal amplitude and the noise variance by `factor`.
    pub fn scale_amplitude(&self, factor: T) -> Self {
        let mut out = self.clone();
        match &mut out {
            KernelSpec::Mixture { params, .. } => {
                params.components.iter_mut().for_each(|c| c.weight = c.weight * factor);
                params.noise_var = params.noise_var * factor;
            }
            KernelSpec::MultiMixture { params, .. } => {
                params.components.iter_mut().for_each(|c| c.weight = c.weight * factor);
                params.noise_var = params.noise_var * factor;
            }
            KernelSpec::Baseline { params, noise_var } => {
                params.amplitude = params.amplitude * factor;
                *noise_var = *noise_var * factor;
            }
        }
        out
    }

    fn slots_per_component(&self) -> usize {
        match self {
            KernelSpec::Mixture { kind, .. } => {
                if *kind == KernelKind::Slsm {
                    4
                } else {
                    3
                }
            }
            KernelSpec::MultiMixture { kind, params } => {
                let p = params.dim();
                if *kind == KernelKind::Slsm {
                    1 + 3 * p
                } else {
                    1 + 2 * p
                }
            }
            KernelSpec::Baseline { params, .. } => params.n_slots(),
        }
    }

    /// Number of kernel slots (the noise slot, always last, is excluded).
    pub fn n_kernel_slots(&self) -> usize {
        self.slots_per_component() * self.n_components()
    }

    /// Flat optimizer view. Layout per component:
    /// SLSM `[ln w, ln μ, ln σ, γ]`, SM/LKP `[ln w, ln μ, ln σ]`,
    /// multivariate `[ln w, ln μ_p.., ln Σ_pp.., (γ_p..)]`, baselines
    /// `[ln θ_f, ln ℓ, (ln α)]`; `ln σ_n²` last.
    pub fn transformed(&self) -> Result<TransformedParams<T>> {
        let mut t = TransformedParams::with_capacity(self.n_kernel_slots() + 1);
        match self {
            KernelSpec::Mixture { kind, params } => {
                for c in &params.components {
                    t.push_log(c.weight, "weight")?;
                    t.push_log(c.freq, "frequency")?;
                    t.push_log(c.scale, "scale")?;
                    if *kind == KernelKind::Slsm {
                        t.push_identity(c.skew)?;
                    }
                }
                t.push_log(params.noise_var, "noise variance")?;
            }
            KernelSpec::MultiMixture { kind, params } => {
                for c in &params.components {
                    t.push_log(c.weight, "weight")?;
                    for &m in &c.freq {
                        t.push_log(m, "frequency")?;
                    }
                    for &s in &c.scale_diag {
                        t.push_log(s, "scale")?;
                    }
                    if *kind == KernelKind::Slsm {
                        for &g in &c.skew {
                            t.push_identity(g)?;
                        }
                    }
                }
                t.push_log(params.noise_var, "noise variance")?;
            }
            KernelSpec::Baseline { params, noise_var } => {
                t.push_log(params.amplitude, "amplitude")?;
                t.push_log(params.lengthscale, "lengthscale")?;
                if params.variant == BaselineVariant::Rq {
                    t.push_log(params.rq_alpha, "rq_alpha")?;
                }
                t.push_log(*noise_var, "noise variance")?;
            }
        }
        Ok(t)
    }

    /// Rebuild parameters from an optimizer vector laid out as in [`Self::transformed`].
    pub fn with_transformed(&self, x: &[T]) -> Result<Self> {
        let expected = self.n_kernel_slots() + 1;
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow("optimizer vector"));
        }
        let noise = x[expected - 1].exp();
        let out = match self {
            KernelSpec::Mixture { kind, params } => {
                let per = self.slots_per_component();
                let components = (0..params.q())
                    .map(|i| {
                        let s = &x[i * per..(i + 1) * per];
                        SlsmComponent {
                            weight: s[0].exp(),
                            freq: s[1].exp(),
                            scale: s[2].exp(),
                            skew: if per == 4 { s[3] } else { T::zero() },
                        }
                    })
                    .collect();
                KernelSpec::Mixture {
                    kind: *kind,
                    params: SlsmParams {
                        components,
                        noise_var: noise,
                    },
                }
            }
            KernelSpec::MultiMixture { kind, params } => {
                let p = params.dim();
                let per = self.slots_per_component();
                let components = (0..params.components.len())
                    .map(|i| {
                        let s = &x[i * per..(i + 1) * per];
                        MultiSlsmComponent {
                            weight: s[0].exp(),
                            freq: s[1..1 + p].iter().map(|v| v.exp()).collect(),
                            scale_diag: s[1 + p..1 + 2 * p].iter().map(|v| v.exp()).collect(),
                            skew: if *kind == KernelKind::Slsm {
                                s[1 + 2 * p..1 + 3 * p].to_vec()
                            } else {
                                vec![T::zero(); p]
                            },
                        }
                    })
                    .collect();
                KernelSpec::MultiMixture {
                    kind: *kind,
                    params: MultiSlsmParams {
                        components,
                        noise_var: noise,
                    },
                }
            }
            KernelSpec::Baseline { params, .. } => {
                let mut b = *params;
                b.amplitude = x[0].exp();
                b.lengthscale = x[1].exp();
                if b.variant == BaselineVariant::Rq {
                    b.rq_alpha = x[2].exp();
                }
                KernelSpec::Baseline {
                    params: b,
                    noise_var: noise,
                }
            }
        };
        Ok(out)
    }

    /// Partials of `k(lag)` with respect to the kernel slots of [`Self::transformed`].
    /// `out` must hold [`Self::n_kernel_slots`] entries.
    pub fn grad_transformed(&self, lag: &[T], out: &mut [T]) {
        match self {
            KernelSpec::Mixture { kind, params } => {
                let tau = lag[0];
                let skew = *kind == KernelKind::Slsm;
                let per = if skew { 4 } else { 3 };
                for (i, c) in params.components.iter().enumerate() {
                    let o = &mut out[i * per..(i + 1) * per];
                    if *kind == KernelKind::Sm {
                        let env = (-T::lit(0.5) * c.scale * c.scale * tau * tau).exp();
                        let (sin, cos) = (c.freq * tau).sin_cos();
                        let k = c.weight * cos * env;
                        o[0] = k;
                        o[1] = -c.weight * sin * env * tau * c.freq;
                        o[2] = -k * c.scale * c.scale * tau * tau;
                    } else {
                        let d = slsm_component_partials(tau, c);
                        o[0] = c.weight * d.d_weight;
                        o[1] = d.d_freq * c.freq;
                        o[2] = d.d_scale * c.scale;
                        if skew {
                            o[3] = d.d_skew;
                        }
                    }
                }
            }
            KernelSpec::MultiMixture { kind, params } => {
                let per = self.slots_per_component();
                for (i, c) in params.components.iter().enumerate() {
                    multi_partials_transformed(
                        lag,
                        c,
                        *kind == KernelKind::Sm,
                        *kind == KernelKind::Slsm,
                        &mut out[i * per..(i + 1) * per],
                    );
                }
            }
            KernelSpec::Baseline { params, .. } => {
                params.partials_transformed(lag.iter().map(|&t| t * t).sum(), out);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Mixture { params, .. } => params.validate(),
            KernelSpec::MultiMixture { params, .. } => params.validate(),
            KernelSpec::Baseline { params, noise_var } => {
                params.validate()?;
                if !(*noise_var >= T::zero()) {
                    return Err(Error::InvalidParameter("noise variance must be >= 0".into()));
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slsm_spec() -> KernelSpec<f64> {
        KernelSpec::mixture(
            KernelKind::Slsm,
            SlsmParams::new(
                vec![
                    SlsmComponent::new(1.3, 0.4, 0.8, 0.3).unwrap(),
                    SlsmComponent::new(0.6, 2.1, 0.2, -0.6).unwrap(),
                ],
                0.05,
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn transformed_round_trip() {
        let k = slsm_spec();
        let t = k.transformed().unwrap();
        assert_eq!(t.len(), 9);
        let back = k.with_transformed(&t.values).unwrap();
        for tau in [0.0, 0.3, 1.7, 12.0] {
            assert!((back.eval_scalar(tau) - k.eval_scalar(tau)).abs() < 1e-14);
        }
    }

    #[test]
    fn lkp_drops_skew() {
        let KernelSpec::Mixture { params, .. } = slsm_spec() else {
            unreachable!()
        };
        let lkp = KernelSpec::mixture(KernelKind::Lkp, params).unwrap();
        assert_eq!(lkp.n_kernel_slots(), 6);
        match &lkp {
            KernelSpec::Mixture { params, .. } => {
                assert!(params.components.iter().all(|c| c.skew == 0.0))
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn transformed_gradient_matches_finite_differences() {
        let specs = vec![
            slsm_spec(),
            KernelSpec::mixture(
                KernelKind::Sm,
                SlsmParams::new(vec![SlsmComponent::new(0.7, 1.1, 0.6, 0.0).unwrap()], 0.1)
                    .unwrap(),
            )
            .unwrap(),
            KernelSpec::multi_mixture(
                KernelKind::Slsm,
                MultiSlsmParams::new(
                    vec![MultiSlsmComponent::new(
                        0.9,
                        vec![0.3, 1.2],
                        vec![0.5, 0.2],
                        vec![0.4, -0.2],
                    )
                    .unwrap()],
                    0.1,
                )
                .unwrap(),
            )
            .unwrap(),
            KernelSpec::multi_mixture(
                KernelKind::Sm,
                MultiSlsmParams::new(
                    vec![MultiSlsmComponent::new(
                        0.9,
                        vec![0.3, 1.2],
                        vec![0.5, 0.2],
                        vec![0.0, 0.0],
                    )
                    .unwrap()],
                    0.1,
                )
                .unwrap(),
            )
            .unwrap(),
            KernelSpec::baseline(BaselineKernelParams::rq(1.4, 0.8, 2.2).unwrap(), 0.1).unwrap(),
            KernelSpec::baseline(BaselineKernelParams::se(1.4, 0.8).unwrap(), 0.1).unwrap(),
        ];
        for k in specs {
            let dim = k.input_dim().unwrap_or(2);
            let lag: Vec<f64> = (0..dim).map(|d| 0.7 + 0.9 * d as f64).collect();
            let x0 = k.transformed().unwrap().values;
            let mut g = vec![0.0; k.n_kernel_slots()];
            k.grad_transformed(&lag, &mut g);
            for i in 0..g.len() {
                let h = 1e-6 * x0[i].abs().max(1.0);
                let mut xp = x0.clone();
                let mut xm = x0.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (k.with_transformed(&xp).unwrap().eval(&lag)
                    - k.with_transformed(&xm).unwrap().eval(&lag))
                    / (2.0 * h);
                let err = (fd - g[i]).abs() / g[i].abs().max(1e-6);
                assert!(err < 1e-5, "{:?} slot {i}: analytic {} fd {fd}", k.kind(), g[i]);
            }
        }
    }

    #[test]
    fn select_components_keeps_order() {
        let k = slsm_spec();
        let s = k.select_components(&[1]).unwrap();
        assert_eq!(s.component_weights(), vec![0.6]);
        assert!(k.select_components(&[]).is_err());
        assert!(k.select_components(&[5]).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("SLSM".parse::<KernelKind>().unwrap(), KernelKind::Slsm);
        assert!("gabor".parse::<KernelKind>().is_err());
    }
}
