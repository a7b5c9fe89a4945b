//! Synthetic datasets with known marginals, used by tests and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{ColumnSpec, Schema, Table};

/// Frequencies of the discrete column of [`mixed`].
pub const MIXED_LEVEL_FREQS: [f64; 3] = [0.5, 0.3, 0.2];
/// Mixture components `(weight, mean, stddev)` of the first column of [`mixed`].
pub const MIXED_BIMODAL: [(f64, f64, f64); 2] = [(0.4, -2.0, 0.6), (0.6, 2.0, 0.8)];

pub fn mixed_schema() -> Schema {
    Schema::new(vec![
        ColumnSpec::continuous("bimodal"),
        ColumnSpec::continuous("skewed"),
        ColumnSpec::discrete("group", ["a", "b", "c"]),
    ])
    .expect("valid schema")
}

/// Group frequencies within each mixture component. Weighted by the
/// component weights they give [`MIXED_LEVEL_FREQS`].
const GROUP_GIVEN_COMPONENT: [[f64; 3]; 2] = [[0.8, 0.1, 0.1], [0.3, 0.4 + 0.1 / 3.0, 0.2 + 0.2 / 3.0]];

/// Two continuous columns and one three-level discrete column:
/// - `bimodal`: the mixture [`MIXED_BIMODAL`];
/// - `group`: marginal frequencies [`MIXED_LEVEL_FREQS`], drawn conditionally
///   on the mixture component;
/// - `skewed`: `exp(N(0, 0.5)) + 0.5 * bimodal + group index`.
pub fn mixed(n: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::<f64>::new(0.0, 0.5).unwrap();
    let rows = (0..n)
        .map(|_| {
            let component = usize::from(rng.random::<f64>() >= MIXED_BIMODAL[0].0);
            let (_, m, s) = MIXED_BIMODAL[component];
            let x = Normal::new(m, s).unwrap().sample(&mut rng);
            let freqs = GROUP_GIVEN_COMPONENT[component];
            let u: f64 = rng.random();
            let g = if u < freqs[0] {
                0
            } else if u < freqs[0] + freqs[1] {
                1
            } else {
                2
            };
            let y = noise.sample(&mut rng).exp() + 0.5 * x + g as f64;
            vec![x, y, g as f64]
        })
        .collect();
    Table::new(mixed_schema(), rows).expect("valid rows")
}

/// CDF of the `bimodal` column.
pub fn bimodal_cdf(x: f64) -> f64 {
    MIXED_BIMODAL
        .iter()
        .map(|&(w, m, s)| w * normal_cdf((x - m) / s))
        .sum()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

// Numerical Recipes erfc, fractional error below 1.2e-7.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// One continuous column drawn from `N(mean, stddev^2)`.
pub fn gaussian(n: usize, mean: f64, stddev: f64, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(mean, stddev).expect("positive stddev");
    let schema = Schema::new(vec![ColumnSpec::continuous("x")]).expect("valid schema");
    Table::new(schema, (0..n).map(|_| vec![dist.sample(&mut rng)]).collect()).expect("valid rows")
}

/// One ordinal column of counts: `round(|N(0, 2)|)` capped at 6.
pub fn ordinal_counts(n: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::<f64>::new(0.0, 2.0).unwrap();
    let schema = Schema::new(vec![ColumnSpec::ordinal("count")]).expect("valid schema");
    let rows = (0..n)
        .map(|_| vec![dist.sample(&mut rng).abs().round().min(6.0)])
        .collect();
    Table::new(schema, rows).expect("valid rows")
}
