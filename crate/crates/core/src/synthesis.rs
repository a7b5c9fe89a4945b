//! Sampling from a trained model and estimating its marginal CDFs.
//!
//! Generation draws `z ~ N(0, I)`, decodes once, then samples every numeric
//! column by inverse transform (`D_j(u | z)` with `u ~ U(0, 1)`) and every
//! discrete column with the Gumbel-max trick. Each row owns a random stream
//! derived from `(seed, row index)`, so rows can be produced in parallel and
//! the output does not depend on scheduling.

use std::io::Write;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::data::{destandardize, ColumnKind, Table};
use crate::error::{Error, Result};
use crate::model::ColumnOutput;
use crate::spline::SplineCoeffs;

/// Monte-Carlo estimate of a marginal CDF on a grid (standardized units).
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl CdfCurve {
    /// Two-column CSV `x,cdf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<cdf output>", e);
        writeln!(w, "x,cdf").map_err(io)?;
        for (x, f) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{x},{f}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Cumulative probabilities of an ordinal column at its levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedCdf {
    pub levels: Vec<f64>,
    pub cum_probs: Vec<f64>,
}

impl DiscretizedCdf {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<cdf output>", e);
        writeln!(w, "level,cdf").map_err(io)?;
        for (x, f) in self.levels.iter().zip(&self.cum_probs) {
            writeln!(w, "{x},{f}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OrdinalRounding {
    /// Snap to the closest level seen in training.
    #[default]
    NearestLevel,
    /// Round to one decimal place.
    FirstDecimal,
}

/// `n x d` matrix of i.i.d. standard normals.
pub fn sample_prior(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// Standard Gumbel draws `-ln(-ln(u))`.
pub fn gumbel_noise<R: Rng + ?Sized>(rng: &mut R, t: usize) -> Vec<f64> {
    (0..t)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            -(-u.ln()).ln()
        })
        .collect()
}

/// `argmax_l (ln pi_l + g_l)`; zero probabilities never win, ties go to the
/// lowest index.
pub fn gumbel_max(pi: &[f64], noise: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (l, (&p, &g)) in pi.iter().zip(noise).enumerate() {
        let score = if p > 0.0 { p.ln() + g } else { f64::NEG_INFINITY };
        if score > best_score {
            best = l;
            best_score = score;
        }
    }
    best
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// Generates `n` rows in native units with default ordinal rounding.
pub fn generate(checkpoint: &Checkpoint, n: usize, seed: u64) -> Result<Table> {
    generate_with(checkpoint, n, seed, OrdinalRounding::default())
}

pub fn generate_with(checkpoint: &Checkpoint, n: usize, seed: u64, rounding: OrdinalRounding) -> Result<Table> {
    let standardized = generate_standardized(checkpoint, n, seed)?;
    let mut data = destandardize(&standardized, &checkpoint.scaling)?.as_flat().to_vec();
    let schema = checkpoint.schema();
    let width = schema.len();
    for info in &checkpoint.columns {
        if schema.columns[info.column].kind != ColumnKind::Ordinal {
            continue;
        }
        for row in data.chunks_exact_mut(width) {
            row[info.column] = round_ordinal(row[info.column], &info.ordinal_levels, rounding);
        }
    }
    Table::from_flat(schema.clone(), data)
}

/// Generated rows before destandardization and ordinal rounding.
pub fn generate_standardized(checkpoint: &Checkpoint, n: usize, seed: u64) -> Result<Table> {
    let model = &checkpoint.model;
    let d = model.latent_dim;
    let rows: Result<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, i);
            let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let out = model.decode(&z)?;
            Ok(out
                .columns
                .iter()
                .map(|col| match col {
                    ColumnOutput::Spline(c) => {
                        let u: f64 = rng.random();
                        c.eval_unchecked(u)
                    }
                    ColumnOutput::Categorical(pi) => {
                        let g = gumbel_noise(&mut rng, pi.len());
                        gumbel_max(pi, &g) as f64
                    }
                })
                .collect())
        })
        .collect();
    Table::from_flat(model.schema.clone(), rows?.concat())
}

/// The decoded splines of one column over a fixed set of prior draws; the
/// estimated CDF at `x` is the average of their inverses.
#[derive(Debug, Clone)]
pub struct CdfEstimator {
    splines: Vec<SplineCoeffs>,
}

impl CdfEstimator {
    pub fn new(checkpoint: &Checkpoint, column: usize, n_mc: usize, seed: u64) -> Result<Self> {
        let schema = checkpoint.schema();
        let spec = schema
            .columns
            .get(column)
            .ok_or_else(|| Error::InvalidArgument(format!("no column {column}")))?;
        if !spec.kind.is_numeric() {
            return Err(Error::InvalidArgument(format!(
                "column {} is discrete; CDF estimation needs a continuous or ordinal column",
                spec.name
            )));
        }
        if n_mc == 0 {
            return Err(Error::InvalidArgument("need at least one Monte-Carlo draw".into()));
        }
        let model = &checkpoint.model;
        let splines: Result<Vec<SplineCoeffs>> = sample_prior(n_mc, model.latent_dim, seed)
            .par_iter()
            .map(|z| {
                let out = model.decode(z)?;
                Ok(out.spline(column).expect("numeric column").clone())
            })
            .collect();
        Ok(CdfEstimator { splines: splines? })
    }

    /// Estimated CDF at `x` (standardized units).
    pub fn eval(&self, x: f64) -> f64 {
        let total: f64 = self.splines.iter().map(|s| s.inverse(x).0).sum();
        (total / self.splines.len() as f64).clamp(0.0, 1.0)
    }
}

/// Estimated marginal CDF of a numeric column on an ascending grid in native
/// units.
pub fn estimate_cdf(checkpoint: &Checkpoint, column: usize, grid: &[f64], n_mc: usize, seed: u64) -> Result<CdfCurve> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("CDF grid must be ascending".into()));
    }
    let est = CdfEstimator::new(checkpoint, column, n_mc, seed)?;
    let scale = *checkpoint
        .scaling
        .for_column(column)
        .ok_or_else(|| Error::Checkpoint(format!("no scaling for column {column}")))?;
    let mut values: Vec<f64> = grid
        .par_iter()
        .map(|&x| est.eval((x - scale.mean) / scale.stddev))
        .collect();
    // Each spline inverse is monotone in x; guard the sum against round-off.
    for i in 1..values.len() {
        if values[i] < values[i - 1] {
            values[i] = values[i - 1];
        }
    }
    Ok(CdfCurve {
        grid: grid.to_vec(),
        values,
    })
}

/// Discretizes a CDF onto ordered levels: each level receives the mass of
/// its `±0.5` window, masses are accumulated, and a forward pass repairs any
/// decrease.
pub fn discretize_cdf(cdf: impl Fn(f64) -> f64, levels: &[f64]) -> Result<DiscretizedCdf> {
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("levels must be strictly increasing".into()));
    }
    let mut cum_probs = Vec::with_capacity(levels.len());
    let mut acc = 0.0;
    for &x in levels {
        acc += cdf(x + 0.5) - cdf(x - 0.5);
        cum_probs.push(acc);
    }
    for i in 0..cum_probs.len().saturating_sub(1) {
        if cum_probs[i] > cum_probs[i + 1] {
            cum_probs[i + 1] = cum_probs[i];
        }
    }
    Ok(DiscretizedCdf {
        levels: levels.to_vec(),
        cum_probs,
    })
}

/// Discretized estimated CDF of an ordinal column at its training levels.
/// The `±0.5` windows live in native units and are mapped into standardized
/// units with the column's scale before querying the estimator.
pub fn ordinal_cdf(checkpoint: &Checkpoint, column: usize, n_mc: usize, seed: u64) -> Result<DiscretizedCdf> {
    let spec = checkpoint
        .schema()
        .columns
        .get(column)
        .ok_or_else(|| Error::InvalidArgument(format!("no column {column}")))?;
    if spec.kind != ColumnKind::Ordinal {
        return Err(Error::InvalidArgument(format!("column {} is not ordinal", spec.name)));
    }
    let info = checkpoint
        .column_info(column)
        .ok_or_else(|| Error::Checkpoint(format!("no level summary for column {}", spec.name)))?;
    let scale = *checkpoint
        .scaling
        .for_column(column)
        .ok_or_else(|| Error::Checkpoint(format!("no scaling for column {}", spec.name)))?;
    let est = CdfEstimator::new(checkpoint, column, n_mc, seed)?;
    discretize_cdf(|x| est.eval((x - scale.mean) / scale.stddev), &info.ordinal_levels)
}

/// Maps a generated ordinal value back onto the level set.
pub fn round_ordinal(value: f64, levels: &[f64], mode: OrdinalRounding) -> f64 {
    match mode {
        OrdinalRounding::FirstDecimal => (value * 10.0).round() / 10.0,
        OrdinalRounding::NearestLevel if levels.is_empty() => value.round(),
        OrdinalRounding::NearestLevel => {
            let mut best = levels[0];
            for &l in &levels[1..] {
                if (l - value).abs() < (best - value).abs() {
                    best = l;
                }
            }
            best
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_moments_and_determinism() {
        let z = sample_prior(100_000, 2, 42);
        for j in 0..2 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (z.len() - 1) as f64;
            assert!(mean.abs() < 0.02, "mean {mean}");
            assert!((0.97..=1.03).contains(&var), "var {var}");
        }
        assert_eq!(sample_prior(5, 3, 1), sample_prior(5, 3, 1));
        let one = sample_prior(1, 2, 0);
        assert_eq!(one.len(), 1);
        assert!(one[0].iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gumbel_max_contracts() {
        assert_eq!(gumbel_max(&[1.0, 0.0, 0.0], &[-5.0, 9.0, 9.0]), 0);
        assert_eq!(gumbel_max(&[0.25; 4], &[0.0; 4]), 0);
        assert_eq!(gumbel_max(&[0.0, 1.0], &[100.0, -100.0]), 1);
    }

    #[test]
    fn gumbel_max_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| gumbel_max(&[0.3, 0.7], &gumbel_noise(&mut rng, 2)) == 1)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.7).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn discretize_uniform_cdf() {
        let uniform = |x: f64| (x / 5.0).clamp(0.0, 1.0);
        let d = discretize_cdf(uniform, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let expected = [0.2, 0.4, 0.6, 0.8];
        for (a, b) in d.cum_probs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{:?}", d.cum_probs);
        }
    }

    #[test]
    fn discretize_flat_and_adversarial() {
        let d = discretize_cdf(|_| 0.4, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.cum_probs, vec![0.0, 0.0, 0.0]);

        // Window increments of +0.3, -0.2, +0.1: the dip must be repaired.
        let bumpy = |x: f64| match x {
            x if x < 0.0 => 0.0,
            x if x < 1.0 => 0.3,
            x if x < 2.0 => 0.1,
            _ => 0.2,
        };
        let d = discretize_cdf(bumpy, &[0.5, 1.5, 2.5]).unwrap();
        assert!(d.cum_probs.windows(2).all(|w| w[0] <= w[1]), "{:?}", d.cum_probs);
        assert!(discretize_cdf(bumpy, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn ordinal_rounding_modes() {
        let levels = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(round_ordinal(3.4, &levels, OrdinalRounding::NearestLevel), 3.0);
        assert_eq!(round_ordinal(3.46, &levels, OrdinalRounding::FirstDecimal), 3.5);
        assert_eq!(round_ordinal(4.0, &levels, OrdinalRounding::NearestLevel), 4.0);
        assert_eq!(round_ordinal(4.0, &levels, OrdinalRounding::FirstDecimal), 4.0);
        assert_eq!(round_ordinal(-7.0, &levels, OrdinalRounding::NearestLevel), 1.0);
        assert_eq!(round_ordinal(3.4, &[], OrdinalRounding::NearestLevel), 3.0);
    }
}
