mod common;

use common::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use slsm_core::gp::{nlml, optimize_kernel, sample_prior, Dataset, Normalization};
use slsm_core::kernel::{KernelKind, KernelSpec, SlsmComponent, SlsmParams};
use slsm_core::optimizer::OptConfig;
use slsm_core::spectral::*;
use slsm_core::Matrix;

#[test]
fn white_noise_satisfies_parseval() {
    let mut r = rng(31);
    let y: Vec<f64> = (0..1024).map(|_| StandardNormal.sample(&mut r)).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64;
    for dt in [1.0, 0.25] {
        let spec = periodogram(&y, dt).unwrap();
        let area = spec.total_power() * spec.bin_width();
        assert!((area / var - 1.0).abs() < 0.05, "dt={dt}: {area} vs {var}");
    }
}

#[test]
fn em_loglik_is_monotone_on_real_spectrum() {
    let y = airline();
    let spec = periodogram(&y, 1.0).unwrap();
    for kind in [MixtureKind::Laplace, MixtureKind::Gaussian] {
        for seed in 0..5 {
            let fit = em_mixture(&spec, 6, kind, seed).unwrap();
            let total: f64 = fit.components.iter().map(|c| c.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for w in fit.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{kind:?} seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn two_tones_give_two_components_within_a_bin() {
    let n = 512;
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64;
            (0.5 * t).sin() + (2.0 * t).sin()
        })
        .collect();
    let spec = periodogram(&y, 1.0).unwrap();
    for kind in [MixtureKind::Laplace, MixtureKind::Gaussian] {
        let fit = em_mixture(&spec, 2, kind, 3).unwrap();
        let mut locs: Vec<f64> = fit.components.iter().map(|c| c.location).collect();
        locs.sort_by(f64::total_cmp);
        assert_eq!(locs.len(), 2);
        assert!((locs[0] - 0.5).abs() <= spec.bin_width());
        assert!((locs[1] - 2.0).abs() <= spec.bin_width());
    }
}

#[test]
fn spectral_init_lands_in_generating_basin() {
    let truth = KernelSpec::mixture(
        KernelKind::Slsm,
        SlsmParams {
            components: vec![
                SlsmComponent {
                    weight: 1.0,
                    freq: 0.6,
                    scale: 0.05,
                    skew: 0.02,
                },
                SlsmComponent {
                    weight: 0.5,
                    freq: 1.9,
                    scale: 0.08,
                    skew: -0.03,
                },
            ],
            noise_var: 0.0,
        },
    )
    .unwrap();
    let t: Vec<f64> = (0..200).map(|i| i as f64).collect();
    let f = sample_prior(&truth, &Matrix::column(&t), 1, 5).unwrap();
    let mut r = rng(32);
    let y: Vec<f64> = f
        .row(0)
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut r);
            v + 0.1 * e
        })
        .collect();
    let data = Dataset::regular(y, 1.0).unwrap();
    let norm = Normalization::from_data(&data);
    let nd = norm.apply(&data).unwrap();

    let mut generating = truth.scale_amplitude(1.0 / norm.variance_scale());
    generating.set_noise_var(0.01 / norm.variance_scale());
    let reference = nlml(&generating, &nd).unwrap();

    let (init, source) = initial_kernel(&nd, KernelKind::Slsm, 2, 1).unwrap();
    assert!(matches!(source, InitSource::Spectral { .. }));
    let cfg = OptConfig {
        max_iters: 300,
        ..OptConfig::default()
    };
    let (_, res) = optimize_kernel(&nd, &init, &cfg).unwrap();
    assert!(
        res.f_best <= reference + 0.01 * reference.abs(),
        "{} vs generating {}",
        res.f_best,
        reference
    );
}

#[test]
fn irregular_or_multivariate_inputs_use_random_init() {
    let mut r = rng(33);
    let data = random_dataset(&mut r, 40, 10.0);
    let (k, source) = initial_kernel(&data, KernelKind::Slsm, 3, 0).unwrap();
    assert!(matches!(source, InitSource::Random));
    assert_eq!(k.n_components(), 3);

    let x = Matrix::from_fn(30, 2, |_, _| r.random_range(0.0..1.0));
    let y = (0..30).map(|i| i as f64).collect();
    let data = Dataset::new(x, y).unwrap();
    let (k, source) = initial_kernel(&data, KernelKind::Sm, 2, 0).unwrap();
    assert!(matches!(source, InitSource::Random));
    assert_eq!(k.input_dim(), Some(2));
}
