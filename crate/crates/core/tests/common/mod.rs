//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use distvae::data::{standardize, ColumnSpec, Schema, Table};
use distvae::model::{elbo_loss, elbo_loss_and_grad, DistVae};
use distvae::spline::{build_spline, uniform_knots, SplineCoeffs};
use distvae::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `2 * int_0^1 rho_a(x - D(a)) da` by the composite trapezoid rule on
/// `nodes` equally spaced levels.
pub fn quadrature_crps(c: &SplineCoeffs, x: f64, nodes: usize) -> f64 {
    let h = 1.0 / (nodes - 1) as f64;
    let check = |a: f64| {
        let u = x - c.eval(a).unwrap();
        u * (a - if u < 0.0 { 1.0 } else { 0.0 })
    };
    let inner: f64 = (1..nodes - 1).map(|i| check(i as f64 * h)).sum();
    2.0 * h * (inner + 0.5 * (check(0.0) + check(1.0)))
}

/// A random monotone spline with `M = 10` and an observation around it.
pub fn random_fixture(rng: &mut impl Rng) -> (SplineCoeffs, f64) {
    let gamma = rng.random_range(-3.0..3.0);
    let raw: Vec<f64> = (0..11).map(|_| rng.random_range(-4.0..3.0)).collect();
    let c = build_spline(gamma, &raw, &uniform_knots(10)).unwrap();
    let lo = c.eval(0.0).unwrap() - 1.0;
    let hi = c.eval(1.0).unwrap() + 1.0;
    (c, rng.random_range(lo..hi))
}

pub fn mixed_schema() -> Schema {
    Schema::new(vec![
        ColumnSpec::continuous("x"),
        ColumnSpec::ordinal("o"),
        ColumnSpec::discrete("c", ["u", "v", "w"]),
    ])
    .unwrap()
}

fn perturb(params: &mut [f64], rng: &mut impl Rng, scale: f64) {
    for p in params {
        *p += scale * rng.sample::<f64, _>(StandardNormal);
    }
}

/// Worst per-parameter relative error between analytic and central
/// finite-difference gradients of the batch objective, on a 3-row batch with
/// frozen noise. Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn elbo_gradient_error(seed: u64, floor: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = mixed_schema();
    let config = TrainConfig {
        knots: 10,
        ..TrainConfig::default()
    };
    let mut model = DistVae::new(&schema, &config, &mut rng).unwrap();
    for net in [&mut model.encoder, &mut model.decoder] {
        let mut p = net.params_flat();
        perturb(&mut p, &mut rng, 0.1);
        net.set_params_flat(&p).unwrap();
    }
    let rows = (0..3)
        .map(|_| {
            vec![
                rng.sample::<f64, _>(StandardNormal),
                rng.random_range(-2..=2) as f64 * 0.5,
                rng.random_range(0..3) as f64,
            ]
        })
        .collect();
    let batch = Table::new(schema, rows).unwrap();
    let noise: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..config.latent_dim).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let beta = rng.random_range(0.1..2.0);
    let (_, enc_grad, dec_grad) = elbo_loss_and_grad(&model, &batch, &noise, beta).unwrap();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (which, analytic) in [(0, enc_grad.flat()), (1, dec_grad.flat())] {
        let base = if which == 0 { model.encoder.params_flat() } else { model.decoder.params_flat() };
        for k in 0..base.len() {
            let eval = |delta: f64| {
                let mut m = model.clone();
                let mut p = base.clone();
                p[k] += delta;
                let net = if which == 0 { &mut m.encoder } else { &mut m.decoder };
                net.set_params_flat(&p).unwrap();
                elbo_loss(&m, &batch, &noise, beta).unwrap().total
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let a = analytic[k];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(err);
        }
    }
    worst
}

/// Standardized random table over [`mixed_schema`].
pub fn random_standardized(n: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            vec![
                rng.sample::<f64, _>(StandardNormal),
                rng.random_range(0..5) as f64,
                rng.random_range(0..3) as f64,
            ]
        })
        .collect();
    standardize(&Table::new(mixed_schema(), rows).unwrap()).unwrap().0
}
