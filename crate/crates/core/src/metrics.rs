//! Utility, similarity and privacy metrics for synthetic tables.
//!
//! Conventions fixed here:
//! - quantiles and percentiles interpolate linearly between order statistics
//!   (position `q * (n - 1)`);
//! - F1 is macro-averaged over the labels present in either truth or
//!   prediction;
//! - associations are Pearson (numeric/numeric), the correlation ratio
//!   (numeric/discrete) and bias-uncorrected Cramér's V (discrete/discrete).

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::data::{standardize, standardize_with, ColumnKind, Schema, Table};
use crate::error::{Error, Result};
use crate::model::TrainConfig;
use crate::synthesis::generate;

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

fn nonempty(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("metric needs two nonempty samples".into()));
    }
    Ok(())
}

/// Walks the merged order statistics of two samples, calling `f` with each
/// breakpoint and the two empirical CDF values just right of it.
fn merged_ecdf_walk(a: &[f64], b: &[f64], mut f: impl FnMut(f64, f64, f64)) {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        f(x, i as f64 / na, j as f64 / nb);
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    nonempty(a, b)?;
    let mut sup: f64 = 0.0;
    merged_ecdf_walk(a, b, |_, fa, fb| sup = sup.max((fa - fb).abs()));
    Ok(sup)
}

/// 1-Wasserstein distance: the area between the two empirical CDFs.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    nonempty(a, b)?;
    let mut area = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    merged_ecdf_walk(a, b, |x, fa, fb| {
        if let Some((px, gap)) = prev {
            area += gap * (x - px);
        }
        prev = Some((x, (fa - fb).abs()));
    });
    Ok(area)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// `sqrt(between-group SS / total SS)` of `values` grouped by `levels`.
fn correlation_ratio(levels: &[f64], t: usize, values: &[f64]) -> Option<f64> {
    let mut sums = vec![0.0; t];
    let mut counts = vec![0usize; t];
    for (&l, &v) in levels.iter().zip(values) {
        sums[l as usize] += v;
        counts[l as usize] += 1;
    }
    let m = mean(values);
    let total: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    if total <= 0.0 {
        return None;
    }
    let between: f64 = (0..t)
        .filter(|&c| counts[c] > 0)
        .map(|c| counts[c] as f64 * (sums[c] / counts[c] as f64 - m).powi(2))
        .sum();
    Some((between / total).sqrt().min(1.0))
}

fn cramers_v(a: &[f64], ta: usize, b: &[f64], tb: usize) -> Option<f64> {
    let n = a.len() as f64;
    let mut table = vec![vec![0.0; tb]; ta];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize][y as usize] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..tb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let r = rows.iter().filter(|&&v| v > 0.0).count();
    let c = cols.iter().filter(|&&v| v > 0.0).count();
    if r < 2 || c < 2 {
        return None;
    }
    let mut chi2 = 0.0;
    for i in 0..ta {
        for j in 0..tb {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                chi2 += (table[i][j] - e).powi(2) / e;
            }
        }
    }
    Some((chi2 / (n * (r.min(c) - 1) as f64)).sqrt().min(1.0))
}

/// Mixed-type association matrix with unit diagonal. Degenerate pairs
/// (constant column, single observed level) contribute 0.
pub fn association_matrix(table: &Table) -> Vec<Vec<f64>> {
    let schema = table.schema();
    let cols: Vec<Vec<f64>> = (0..schema.len()).map(|j| table.column(j)).collect();
    let p = schema.len();
    let mut m = vec![vec![0.0; p]; p];
    for i in 0..p {
        m[i][i] = 1.0;
        for j in i + 1..p {
            let (ci, cj) = (&schema.columns[i], &schema.columns[j]);
            let v = match (ci.kind, cj.kind) {
                (ColumnKind::Discrete, ColumnKind::Discrete) => {
                    cramers_v(&cols[i], ci.level_count(), &cols[j], cj.level_count())
                }
                (ColumnKind::Discrete, _) => correlation_ratio(&cols[i], ci.level_count(), &cols[j]),
                (_, ColumnKind::Discrete) => correlation_ratio(&cols[j], cj.level_count(), &cols[i]),
                _ => pearson(&cols[i], &cols[j]),
            };
            let v = v.unwrap_or_else(|| {
                if table.n_rows() > 0 {
                    warn!("degenerate association between {} and {}; using 0", ci.name, cj.name);
                }
                0.0
            });
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Frobenius distance between the association matrices of two tables.
pub fn correlation_distance(real: &Table, synth: &Table) -> Result<f64> {
    real.check_same_schema(synth)?;
    if real.is_empty() || synth.is_empty() {
        return Err(Error::InvalidArgument("correlation distance needs nonempty tables".into()));
    }
    let (a, b) = (association_matrix(real), association_matrix(synth));
    Ok(a.iter()
        .zip(&b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).powi(2)))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dcr {
    /// Real records to their closest synthetic record.
    pub rs: f64,
    /// Real records to their closest other real record.
    pub rr: f64,
    /// Synthetic records to their closest other synthetic record.
    pub ss: f64,
}

fn numeric_points(table: &Table) -> Vec<Vec<f64>> {
    let cols = table.schema().numeric_indices();
    table.rows().map(|r| cols.iter().map(|&j| r[j]).collect()).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest-neighbor L2 distance from every point of `from` to `to`. With
/// `exclude_self`, index `i` of `to` is skipped for point `i`.
fn nearest_distances(from: &[Vec<f64>], to: &[Vec<f64>], exclude_self: bool) -> Vec<f64> {
    from.par_iter()
        .enumerate()
        .map(|(i, p)| {
            to.iter()
                .enumerate()
                .filter(|&(j, _)| !(exclude_self && i == j))
                .map(|(_, q)| sq_dist(p, q))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

fn fifth_percentile(d: &[f64]) -> f64 {
    quantile_sorted(&sorted(d), 0.05)
}

/// Distance to closest record over the continuous/ordinal columns, taken as
/// given (pass standardized tables for standardized units).
pub fn dcr(real: &Table, synth: &Table) -> Result<Dcr> {
    real.check_same_schema(synth)?;
    if real.schema().numeric_indices().is_empty() {
        return Err(Error::InvalidArgument("DCR needs at least one continuous column".into()));
    }
    if real.n_rows() < 2 || synth.n_rows() < 2 {
        return Err(Error::InvalidArgument("DCR needs at least two rows per table".into()));
    }
    let (r, s) = (numeric_points(real), numeric_points(synth));
    Ok(Dcr {
        rs: fifth_percentile(&nearest_distances(&r, &s, false)),
        rr: fifth_percentile(&nearest_distances(&r, &r, true)),
        ss: fifth_percentile(&nearest_distances(&s, &s, true)),
    })
}

/// Fraction of `test` strictly below the empirical `alpha`-quantile of
/// `synth`.
pub fn vrate(test: &[f64], synth: &[f64], alpha: f64) -> Result<f64> {
    nonempty(test, synth)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let q = quantile_sorted(&sorted(synth), alpha);
    Ok(test.iter().filter(|&&x| x < q).count() as f64 / test.len() as f64)
}

/// Macro F1 over labels occurring in `truth` or `pred`.
pub fn macro_f1(truth: &[usize], pred: &[usize]) -> f64 {
    let n_labels = truth.iter().chain(pred).copied().max().map_or(0, |m| m + 1);
    let mut tp = vec![0.0; n_labels];
    let mut fp = vec![0.0; n_labels];
    let mut fn_ = vec![0.0; n_labels];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            tp[t] += 1.0;
        } else {
            fp[p] += 1.0;
            fn_[t] += 1.0;
        }
    }
    let present: Vec<usize> = (0..n_labels)
        .filter(|&l| tp[l] + fp[l] + fn_[l] > 0.0)
        .collect();
    if present.is_empty() {
        return 0.0;
    }
    present
        .iter()
        .map(|&l| {
            let denom = 2.0 * tp[l] + fp[l] + fn_[l];
            if denom > 0.0 {
                2.0 * tp[l] / denom
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / present.len() as f64
}

pub fn accuracy(truth: &[bool], pred: &[bool]) -> f64 {
    truth.iter().zip(pred).filter(|(a, b)| a == b).count() as f64 / truth.len().max(1) as f64
}

/// ROC AUC via the rank-sum statistic; tied scores share their mean rank.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidArgument("AUC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    let rank_sum: f64 = (0..labels.len()).filter(|&k| labels[k]).map(|k| ranks[k]).sum();
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Softmax regression without intercept (add a constant feature for one),
/// fitted by full-batch gradient descent on the mean cross-entropy plus a
/// small L2 penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub classes: usize,
    /// `classes x features`, row-major.
    pub weights: Vec<f64>,
    features: usize,
}

impl LogisticModel {
    const STEPS: usize = 500;
    const LEARNING_RATE: f64 = 0.5;
    const L2: f64 = 1e-4;

    pub fn fit(x: &[Vec<f64>], y: &[usize], classes: usize) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidArgument("logistic regression needs matching nonempty x and y".into()));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
            return Err(Error::InvalidArgument(format!("label {bad} out of range for {classes} classes")));
        }
        let p = x[0].len();
        let n = x.len() as f64;
        let mut model = LogisticModel {
            classes,
            weights: vec![0.0; classes * p],
            features: p,
        };
        let mut grad = vec![0.0; classes * p];
        for _ in 0..Self::STEPS {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (xi, &yi) in x.iter().zip(y) {
                let probs = model.predict_proba(xi);
                for c in 0..classes {
                    let r = probs[c] - if c == yi { 1.0 } else { 0.0 };
                    for f in 0..p {
                        grad[c * p + f] += r * xi[f];
                    }
                }
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= Self::LEARNING_RATE * (g / n + Self::L2 * *w);
            }
        }
        Ok(model)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .weights
            .chunks_exact(self.features)
            .map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        crate::model::softmax(&logits)
    }

    /// Most probable class, lowest index on ties.
    pub fn predict(&self, x: &[f64]) -> usize {
        let p = self.predict_proba(x);
        let mut best = 0;
        for c in 1..p.len() {
            if p[c] > p[best] {
                best = c;
            }
        }
        best
    }
}

/// One-hot design row of every column except `target`.
fn design_row(schema: &Schema, row: &[f64], target: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for (j, (spec, &v)) in schema.columns.iter().zip(row).enumerate() {
        if j == target {
            continue;
        }
        match spec.kind {
            ColumnKind::Discrete => {
                out.extend((0..spec.level_count()).map(|l| if l == v as usize { 1.0 } else { 0.0 }))
            }
            _ => out.push(v),
        }
    }
    out
}

fn design(table: &Table, target: usize) -> Vec<Vec<f64>> {
    table.rows().map(|r| design_row(table.schema(), r, target)).collect()
}

/// Least squares without intercept, falling back to a tiny ridge when the
/// normal equations are singular.
pub fn fit_ols(x: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument("OLS needs matching nonempty x and y".into()));
    }
    let p = x[0].len();
    let xm = DMatrix::from_fn(x.len(), p, |i, j| x[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let xty = xm.transpose() * yv;
    if let Some(ch) = xtx.clone().cholesky() {
        let w = ch.solve(&xty);
        if w.iter().all(|v| v.is_finite()) {
            return Ok(w.iter().copied().collect());
        }
    }
    warn!("singular normal equations; using ridge fallback (lambda = 1e-6)");
    let ridge = xtx + DMatrix::identity(p, p) * 1e-6;
    let ch = ridge
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("normal equations remain singular under ridge".into()))?;
    Ok(ch.solve(&xty).iter().copied().collect())
}

/// Mean absolute relative error with the denominator floored at `1e-8`.
pub fn mare(truth: &[f64], pred: &[f64]) -> f64 {
    truth
        .iter()
        .zip(pred)
        .map(|(y, p)| (y - p).abs() / y.abs().max(1e-8))
        .sum::<f64>()
        / truth.len().max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MluScores {
    pub mare: f64,
    pub f1: f64,
}

/// Machine-learning utility: fit on `synth`, score on `real_test`.
///
/// Features are every other column, one-hot for discrete ones, numeric
/// columns standardized with `real_train` statistics. The regression target
/// stays in native units so that relative errors are meaningful.
pub fn mlu(
    real_train: &Table,
    real_test: &Table,
    synth: &Table,
    regression_target: usize,
    classification_target: usize,
) -> Result<MluScores> {
    real_train.check_same_schema(real_test)?;
    real_train.check_same_schema(synth)?;
    let schema = real_train.schema();
    let reg = schema
        .columns
        .get(regression_target)
        .ok_or_else(|| Error::InvalidArgument(format!("no column {regression_target}")))?;
    let cls = schema
        .columns
        .get(classification_target)
        .ok_or_else(|| Error::InvalidArgument(format!("no column {classification_target}")))?;
    if !reg.kind.is_numeric() {
        return Err(Error::InvalidArgument(format!("regression target {} must be continuous", reg.name)));
    }
    if cls.kind != ColumnKind::Discrete {
        return Err(Error::InvalidArgument(format!("classification target {} must be discrete", cls.name)));
    }
    if synth.is_empty() || real_test.is_empty() {
        return Err(Error::InvalidArgument("MLu needs nonempty synthetic and test tables".into()));
    }
    let (_, stats) = standardize(real_train)?;
    let synth_std = standardize_with(synth, &stats)?;
    let test_std = standardize_with(real_test, &stats)?;

    let w = fit_ols(&design(&synth_std, regression_target), &synth.column(regression_target))?;
    let pred: Vec<f64> = design(&test_std, regression_target)
        .iter()
        .map(|x| x.iter().zip(&w).map(|(a, b)| a * b).sum())
        .collect();
    let mare = mare(&real_test.column(regression_target), &pred);

    let labels: Vec<usize> = synth.column(classification_target).iter().map(|&v| v as usize).collect();
    let clf = LogisticModel::fit(&design(&synth_std, classification_target), &labels, cls.level_count())?;
    let truth: Vec<usize> = real_test.column(classification_target).iter().map(|&v| v as usize).collect();
    let pred: Vec<usize> = design(&test_std, classification_target)
        .iter()
        .map(|x| clf.predict(x))
        .collect();
    Ok(MluScores {
        mare,
        f1: macro_f1(&truth, &pred),
    })
}

/// Attribute disclosure for several neighbor counts at once; see
/// [`attribute_disclosure`].
pub fn attribute_disclosure_multi(
    real: &Table,
    synth: &Table,
    known: &[usize],
    secret: &[usize],
    ks: &[usize],
) -> Result<Vec<f64>> {
    real.check_same_schema(synth)?;
    let schema = real.schema();
    if known.is_empty() || secret.is_empty() {
        return Err(Error::InvalidArgument("need known and secret columns".into()));
    }
    for &j in known {
        match schema.columns.get(j) {
            Some(c) if c.kind.is_numeric() => {}
            _ => return Err(Error::InvalidArgument(format!("known column {j} must be continuous"))),
        }
    }
    for &j in secret {
        match schema.columns.get(j) {
            Some(c) if c.kind == ColumnKind::Discrete => {}
            _ => return Err(Error::InvalidArgument(format!("secret column {j} must be discrete"))),
        }
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if real.is_empty() || synth.is_empty() {
        return Err(Error::InvalidArgument("attribute disclosure needs nonempty tables".into()));
    }
    let ks: Vec<usize> = ks
        .iter()
        .map(|&k| {
            if k > synth.n_rows() {
                warn!("k = {k} exceeds {} synthetic rows; clamping", synth.n_rows());
            }
            k.min(synth.n_rows())
        })
        .collect();
    let k_max = *ks.iter().max().unwrap();

    let point = |t: &Table, i: usize| -> Vec<f64> { known.iter().map(|&j| t.get(i, j)).collect() };
    let synth_pts: Vec<Vec<f64>> = (0..synth.n_rows()).map(|i| point(synth, i)).collect();
    // For every real record, its k_max nearest synthetic rows (ties by index).
    let neighbors: Vec<Vec<usize>> = (0..real.n_rows())
        .into_par_iter()
        .map(|i| {
            let p = point(real, i);
            let mut d: Vec<(f64, usize)> = synth_pts.iter().enumerate().map(|(j, q)| (sq_dist(&p, q), j)).collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k_max < d.len() {
                d.select_nth_unstable_by(k_max - 1, cmp);
                d.truncate(k_max);
            }
            d.sort_by(cmp);
            d.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    Ok(ks
        .iter()
        .map(|&k| {
            let per_secret: Vec<f64> = secret
                .iter()
                .map(|&s| {
                    let t = schema.columns[s].level_count();
                    let truth: Vec<usize> = real.column(s).iter().map(|&v| v as usize).collect();
                    let pred: Vec<usize> = neighbors
                        .iter()
                        .map(|nn| {
                            let mut votes = vec![0usize; t];
                            for &j in &nn[..k] {
                                votes[synth.get(j, s) as usize] += 1;
                            }
                            let mut best = 0;
                            for l in 1..t {
                                if votes[l] > votes[best] {
                                    best = l;
                                }
                            }
                            best
                        })
                        .collect();
                    macro_f1(&truth, &pred)
                })
                .collect();
            mean(&per_secret)
        })
        .collect())
}

/// Macro F1 of recovering each `secret` (discrete) column of `real` by a
/// majority vote over the `k` nearest synthetic rows in the `known`
/// (continuous) columns. Ties in the vote go to the lowest level.
pub fn attribute_disclosure(real: &Table, synth: &Table, known: &[usize], secret: &[usize], k: usize) -> Result<f64> {
    Ok(attribute_disclosure_multi(real, synth, known, secret, &[k])?[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiaConfig {
    /// Discrete column that splits the attack into per-class models.
    pub class_column: usize,
    /// Shadow model training configuration; its seed is overridden by `seed`.
    pub train_config: TrainConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiaReport {
    pub accuracy: f64,
    pub auc: f64,
}

fn posterior_means(ckpt: &Checkpoint, raw: &Table) -> Result<Vec<Vec<f64>>> {
    let scaled = standardize_with(raw, &ckpt.scaling)?;
    (0..scaled.n_rows())
        .into_par_iter()
        .map(|i| {
            let mut z = ckpt.model.encode_row(scaled.row(i))?.mu;
            z.push(1.0);
            Ok(z)
        })
        .collect()
}

/// Shadow-model membership inference against a trained synthesizer.
///
/// 1. Draw disjoint shadow train/test sets from the target model, each the
///    size of `real_train`.
/// 2. Train a shadow model on the shadow train set with the target's recipe.
/// 3. Label shadow-encoder posterior means of shadow train rows `in` and of
///    shadow test rows `out`.
/// 4. Fit one binary attack classifier per class of `class_column`.
/// 5. Attack the target encoder on a balanced sample of real train (`in`)
///    and real test (`out`) records and report accuracy and AUC.
///
/// Tables are in native units.
pub fn membership_inference(
    target: &Checkpoint,
    real_train: &Table,
    real_test: &Table,
    config: &MiaConfig,
) -> Result<MiaReport> {
    let schema = target.schema();
    if real_train.schema() != schema || real_test.schema() != schema {
        return Err(Error::Shape("tables do not match the target model schema".into()));
    }
    let class_spec = schema
        .columns
        .get(config.class_column)
        .filter(|c| c.kind == ColumnKind::Discrete)
        .ok_or_else(|| Error::InvalidArgument("membership inference needs a discrete class column".into()))?;
    if real_train.n_rows() < 2 || real_test.n_rows() < 2 {
        return Err(Error::InvalidArgument("membership inference needs at least two train and test rows".into()));
    }

    let n = real_train.n_rows();
    let shadow_all = generate(target, 2 * n, config.seed)?;
    let shadow_train = shadow_all.select_rows(&(0..n).collect::<Vec<_>>());
    let shadow_test = shadow_all.select_rows(&(n..2 * n).collect::<Vec<_>>());
    let shadow_config = TrainConfig {
        seed: config.seed.wrapping_add(1),
        ..config.train_config
    };
    let shadow = Checkpoint::fit(&shadow_train, &shadow_config)?;

    let t = class_spec.level_count();
    let mut features: Vec<Vec<Vec<f64>>> = vec![Vec::new(); t];
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); t];
    for (table, member) in [(&shadow_train, 1usize), (&shadow_test, 0)] {
        let z = posterior_means(&shadow, table)?;
        for (i, zi) in z.into_iter().enumerate() {
            let c = table.get(i, config.class_column) as usize;
            features[c].push(zi);
            labels[c].push(member);
        }
    }
    let attacks: Vec<Option<LogisticModel>> = (0..t)
        .map(|c| {
            let has_both = labels[c].contains(&0) && labels[c].contains(&1);
            if !has_both {
                warn!("class {} has a single membership label; skipping its attack model", class_spec.levels[c]);
                return Ok(None);
            }
            LogisticModel::fit(&features[c], &labels[c], 2).map(Some)
        })
        .collect::<Result<_>>()?;

    let m = real_train.n_rows().min(real_test.n_rows());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut pick = |table: &Table| {
        let mut idx: Vec<usize> = (0..table.n_rows()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(m);
        idx.sort_unstable();
        table.select_rows(&idx)
    };
    let (ins, outs) = (pick(real_train), pick(real_test));

    let mut scores = Vec::with_capacity(2 * m);
    let mut truth = Vec::with_capacity(2 * m);
    for (table, member) in [(&ins, true), (&outs, false)] {
        let z = posterior_means(target, table)?;
        for (i, zi) in z.iter().enumerate() {
            let c = table.get(i, config.class_column) as usize;
            let p = attacks[c].as_ref().map_or(0.5, |a| a.predict_proba(zi)[1]);
            scores.push(p);
            truth.push(member);
        }
    }
    let pred: Vec<bool> = scores.iter().map(|&p| p > 0.5).collect();
    Ok(MiaReport {
        accuracy: accuracy(&truth, &pred),
        auc: roc_auc(&scores, &truth)?,
    })
}

/// Full evaluation report. On disk this is a JSON object with exactly these
/// field names; the `mia_*` fields appear only when the attack was run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mare: f64,
    pub f1: f64,
    pub ks_cont: f64,
    pub ks_disc: f64,
    pub wd1_cont: f64,
    pub wd1_disc: f64,
    pub corr_dist: f64,
    pub dcr_rs: f64,
    pub dcr_rr: f64,
    pub dcr_ss: f64,
    pub vrate: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mia_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mia_auc: Option<f64>,
    pub attr_disclosure_f1: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions<'a> {
    pub regression_target: usize,
    pub classification_target: usize,
    /// Attacker's known columns; defaults to every continuous/ordinal column.
    pub known: Option<Vec<usize>>,
    /// Attacked columns; defaults to every discrete column.
    pub secret: Option<Vec<usize>>,
    pub neighbor_counts: Vec<usize>,
    pub alphas: Vec<f64>,
    /// Target model and attack settings; the attack runs only when set.
    pub membership: Option<(&'a Checkpoint, MiaConfig)>,
}

impl EvalOptions<'_> {
    pub fn new(regression_target: usize, classification_target: usize) -> Self {
        EvalOptions {
            regression_target,
            classification_target,
            known: None,
            secret: None,
            neighbor_counts: vec![1, 10, 100],
            alphas: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            membership: None,
        }
    }
}

/// Runs the whole battery on native-unit tables. Marginal distances and DCR
/// are computed in units standardized by `real_train`; per-type marginal
/// scores are averaged over columns (0 when a type is absent).
pub fn evaluate(real_train: &Table, real_test: &Table, synth: &Table, opts: &EvalOptions) -> Result<MetricReport> {
    real_train.check_same_schema(real_test)?;
    real_train.check_same_schema(synth)?;
    let schema = real_train.schema();
    let (train_std, stats) = standardize(real_train)?;
    let synth_std = standardize_with(synth, &stats)?;

    let numeric = schema.numeric_indices();
    let discrete = schema.discrete_indices();
    let avg = |cols: &[usize], f: &dyn Fn(&[f64], &[f64]) -> Result<f64>| -> Result<f64> {
        if cols.is_empty() {
            return Ok(0.0);
        }
        let vals = cols
            .iter()
            .map(|&j| f(&train_std.column(j), &synth_std.column(j)))
            .collect::<Result<Vec<_>>>()?;
        Ok(mean(&vals))
    };

    let scores = mlu(real_train, real_test, synth, opts.regression_target, opts.classification_target)?;
    let d = dcr(&train_std, &synth_std)?;

    let mut vrates = BTreeMap::new();
    for &a in &opts.alphas {
        let per_col = numeric
            .iter()
            .map(|&j| vrate(&real_test.column(j), &synth.column(j), a))
            .collect::<Result<Vec<_>>>()?;
        vrates.insert(format!("{a}"), mean(&per_col));
    }

    let known = opts.known.clone().unwrap_or_else(|| numeric.clone());
    let secret = opts.secret.clone().unwrap_or_else(|| discrete.clone());
    let mut disclosure = BTreeMap::new();
    if !secret.is_empty() {
        let f1s = attribute_disclosure_multi(&train_std, &synth_std, &known, &secret, &opts.neighbor_counts)?;
        for (k, f1) in opts.neighbor_counts.iter().zip(f1s) {
            disclosure.insert(k.to_string(), f1);
        }
    }

    let mia = match &opts.membership {
        Some((ckpt, cfg)) => Some(membership_inference(ckpt, real_train, real_test, cfg)?),
        None => None,
    };

    Ok(MetricReport {
        mare: scores.mare,
        f1: scores.f1,
        ks_cont: avg(&numeric, &ks_statistic)?,
        ks_disc: avg(&discrete, &ks_statistic)?,
        wd1_cont: avg(&numeric, &wasserstein1)?,
        wd1_disc: avg(&discrete, &wasserstein1)?,
        corr_dist: correlation_distance(real_train, synth)?,
        dcr_rs: d.rs,
        dcr_rr: d.rr,
        dcr_ss: d.ss,
        vrate: vrates,
        mia_accuracy: mia.map(|m| m.accuracy),
        mia_auc: mia.map(|m| m.auc),
        attr_disclosure_f1: disclosure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnSpec;
    use rand::Rng;

    /// sup |F_a - F_b| and the CDF-gap integral by direct evaluation at every
    /// merged breakpoint.
    fn brute_force(a: &[f64], b: &[f64]) -> (f64, f64) {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        let mut pts: Vec<f64> = a.iter().chain(b).copied().collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let ks = pts.iter().map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max);
        let wd = pts
            .windows(2)
            .map(|w| (cdf(a, w[0]) - cdf(b, w[0])).abs() * (w[1] - w[0]))
            .sum();
        (ks, wd)
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).unwrap(), 0.25);
        assert!(ks_statistic(&[], &[1.0]).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein1(&[0.5, 2.0], &[2.0, 0.5]).unwrap(), 0.0);
        assert_eq!(wasserstein1(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(wasserstein1(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), 1.0);
        assert!(wasserstein1(&[1.0], &[]).is_err());
    }

    #[test]
    fn ks_and_wd_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let na = rng.random_range(1..=50);
            let nb = rng.random_range(1..=50);
            // Coarse values so ties are common.
            let a: Vec<f64> = (0..na).map(|_| (rng.random_range(-20..20) as f64) / 4.0).collect();
            let b: Vec<f64> = (0..nb).map(|_| (rng.random_range(-20..20) as f64) / 4.0).collect();
            let (ks, wd) = brute_force(&a, &b);
            assert!((ks_statistic(&a, &b).unwrap() - ks).abs() < 1e-12);
            assert!((wasserstein1(&a, &b).unwrap() - wd).abs() < 1e-9);
            assert_eq!(ks_statistic(&a, &b).unwrap(), ks_statistic(&b, &a).unwrap());
            if na == nb {
                let (sa, sb) = (sorted(&a), sorted(&b));
                let direct = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / na as f64;
                assert!((wasserstein1(&a, &b).unwrap() - direct).abs() < 1e-9);
            }
        }
    }

    fn cont2(rows: Vec<[f64; 2]>) -> Table {
        let s = Schema::new(vec![ColumnSpec::continuous("a"), ColumnSpec::continuous("b")]).unwrap();
        Table::new(s, rows.into_iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn correlation_distance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20_000;
        let indep = cont2((0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect());
        let linked = cont2((0..n).map(|i| [i as f64, 2.0 * i as f64 + 1.0]).collect());
        assert_eq!(correlation_distance(&indep, &indep).unwrap(), 0.0);
        let d = correlation_distance(&indep, &linked).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 0.03, "distance {d}");
        let m = association_matrix(&indep);
        assert_eq!((m[0][0], m[1][1]), (1.0, 1.0));
    }

    #[test]
    fn mixed_associations() {
        let s = Schema::new(vec![
            ColumnSpec::continuous("x"),
            ColumnSpec::discrete("c", ["a", "b"]),
            ColumnSpec::discrete("d", ["a", "b"]),
        ])
        .unwrap();
        // x is fully determined by c; d copies c.
        let rows = (0..10).map(|i| vec![(i % 2) as f64 * 3.0, (i % 2) as f64, (i % 2) as f64]).collect();
        let m = association_matrix(&Table::new(s.clone(), rows).unwrap());
        assert!((m[0][1] - 1.0).abs() < 1e-12);
        assert!((m[1][2] - 1.0).abs() < 1e-12);
        // A constant column gives zero association, not NaN.
        let rows = (0..10).map(|i| vec![1.0, (i % 2) as f64, 0.0]).collect();
        let m = association_matrix(&Table::new(s, rows).unwrap());
        assert_eq!(m[0][1], 0.0);
        assert_eq!(m[1][2], 0.0);
    }

    #[test]
    fn dcr_examples() {
        let s = Schema::new(vec![ColumnSpec::continuous("a")]).unwrap();
        let t = |v: &[f64]| Table::new(s.clone(), v.iter().map(|&x| vec![x]).collect()).unwrap();
        let real = t(&[0.0, 10.0]);
        let d = dcr(&real, &t(&[1.0, 12.0])).unwrap();
        assert!((d.rs - 1.05).abs() < 1e-12);
        assert_eq!(dcr(&real, &real).unwrap().rs, 0.0);
        assert_eq!(dcr(&t(&[3.0, 3.0, 3.0]), &t(&[3.0, 3.0])).unwrap().ss, 0.0);
        assert_eq!(dcr(&real, &t(&[1.0, 12.0])).unwrap().rr, 10.0);

        let disc = Schema::new(vec![ColumnSpec::discrete("c", ["a", "b"])]).unwrap();
        let only_disc = Table::new(disc, vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(dcr(&only_disc, &only_disc).is_err());
    }

    #[test]
    fn vrate_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let test: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let synth: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!((vrate(&test, &synth, 0.5).unwrap() - 0.5).abs() < 0.03);
        assert_eq!(vrate(&[1.0, 2.0], &[-5.0, -4.0], 0.5).unwrap(), 0.0);
        assert_eq!(vrate(&[1.0, 2.0], &[10.0, 11.0], 0.5).unwrap(), 1.0);
        assert!(vrate(&[1.0], &[1.0], 1.0).is_err());
        let mut prev = 0.0;
        for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let v = vrate(&test, &synth, a).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 2, 1], &[0, 1, 2, 1]), 1.0);
        let truth = [0, 1, 0, 1, 0, 1];
        assert!((macro_f1(&truth, &[0; 6]) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn auc_examples() {
        let labels = [true, true, false, false];
        assert_eq!(roc_auc(&[0.9, 0.8, 0.1, 0.2], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.9, 0.8], &labels).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5; 4], &labels).unwrap(), 0.5);
        assert!(roc_auc(&[0.5], &[true]).is_err());
    }

    #[test]
    fn logistic_separates_and_null_attack_is_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x: Vec<Vec<f64>> = (0..400)
            .map(|i| vec![if i % 2 == 0 { 2.0 } else { -2.0 } + rng.random_range(-0.5..0.5), 1.0])
            .collect();
        let y: Vec<usize> = (0..400).map(|i| i % 2).collect();
        let m = LogisticModel::fit(&x, &y, 2).unwrap();
        let pred: Vec<usize> = x.iter().map(|v| m.predict(v)).collect();
        assert_eq!(macro_f1(&y, &pred), 1.0);

        // Labels unrelated to features: held-out accuracy hovers at 0.5.
        let z: Vec<Vec<f64>> = (0..4000).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0]).collect();
        let mut labels: Vec<usize> = (0..4000).map(|i| i % 2).collect();
        labels.shuffle(&mut rng);
        let attack = LogisticModel::fit(&z[..2000], &labels[..2000], 2).unwrap();
        let truth: Vec<bool> = labels[2000..].iter().map(|&l| l == 1).collect();
        let guess: Vec<bool> = z[2000..].iter().map(|v| attack.predict(v) == 1).collect();
        let acc = accuracy(&truth, &guess);
        assert!((acc - 0.5).abs() < 0.05, "accuracy {acc}");
    }

    #[test]
    fn ols_recovers_and_handles_singular_designs() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] - 0.5 * r[1]).collect();
        let w = fit_ols(&x, &y).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-8 && (w[1] + 0.5).abs() < 1e-8);

        let dup: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| 3.0 * i as f64).collect();
        let w = fit_ols(&dup, &y).unwrap();
        let pred: Vec<f64> = dup.iter().map(|r| r[0] * w[0] + r[1] * w[1]).collect();
        assert!(mare(&y[1..], &pred[1..]) < 1e-6);
    }

    fn mixed_table(n: usize, seed: u64) -> Table {
        let s = Schema::new(vec![
            ColumnSpec::continuous("x"),
            ColumnSpec::continuous("y"),
            ColumnSpec::discrete("c", ["a", "b"]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|_| {
                let x: f64 = rng.random_range(1.0..3.0);
                let c = if x > 2.0 { 1.0 } else { 0.0 };
                vec![x, 3.0 * x + 1.5 * c + 0.5, c]
            })
            .collect();
        Table::new(s, rows).unwrap()
    }

    #[test]
    fn mlu_on_real_data_matches_baseline() {
        let train = mixed_table(300, 1);
        let test = mixed_table(100, 2);
        let baseline = mlu(&train, &test, &train, 1, 2).unwrap();
        assert!(baseline.mare < 0.05, "{baseline:?}");
        assert!(baseline.f1 > 0.95, "{baseline:?}");
        let same = mlu(&train, &test, &train.clone(), 1, 2).unwrap();
        assert!(same.mare <= 2.0 * baseline.mare + 1e-12);
        assert!(mlu(&train, &test, &train, 2, 1).is_err());
    }

    #[test]
    fn attribute_disclosure_cases() {
        let real = mixed_table(400, 3);
        let (real_std, _) = standardize(&real).unwrap();
        assert_eq!(attribute_disclosure(&real_std, &real_std, &[0, 1], &[2], 1).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut noisy = real_std.as_flat().to_vec();
        for row in noisy.chunks_exact_mut(3) {
            row[2] = rng.random_range(0..2) as f64;
        }
        let shuffled = Table::from_flat(real.schema().clone(), noisy).unwrap();
        let f1 = attribute_disclosure(&real_std, &shuffled, &[0, 1], &[2], 1).unwrap();
        assert!((f1 - 0.5).abs() < 0.05, "f1 {f1}");

        assert!(attribute_disclosure(&real_std, &real_std, &[2], &[2], 1).is_err());
        assert!(attribute_disclosure(&real_std, &real_std, &[0], &[1], 1).is_err());
        // k larger than the synthetic table is clamped.
        assert!(attribute_disclosure(&real_std, &real_std, &[0], &[2], 10_000).is_ok());
    }

    #[test]
    fn even_k_ties_go_to_lowest_level() {
        let s = Schema::new(vec![ColumnSpec::continuous("x"), ColumnSpec::discrete("c", ["a", "b"])]).unwrap();
        let real = Table::new(s.clone(), vec![vec![0.0, 1.0], vec![10.0, 0.0]]).unwrap();
        // Both real rows see one neighbor of each level among their 2 nearest.
        let synth = Table::new(
            s,
            vec![vec![0.1, 1.0], vec![-0.1, 0.0], vec![10.1, 1.0], vec![9.9, 0.0]],
        )
        .unwrap();
        // Predictions are level 0 for both rows: truth (1, 0) -> F1 over {0, 1}.
        let f1 = attribute_disclosure(&real, &synth, &[0], &[1], 2).unwrap();
        assert!((f1 - macro_f1(&[1, 0], &[0, 0])).abs() < 1e-12);
    }

    #[test]
    fn metrics_are_row_order_invariant() {
        let real = mixed_table(200, 5);
        let synth = mixed_table(150, 6);
        let mut idx: Vec<usize> = (0..200).collect();
        idx.reverse();
        let flipped = real.select_rows(&idx);
        let (a, b) = (
            correlation_distance(&real, &synth).unwrap(),
            correlation_distance(&flipped, &synth).unwrap(),
        );
        assert!((a - b).abs() < 1e-12);
        assert_eq!(dcr(&real, &synth).unwrap(), dcr(&flipped, &synth).unwrap());
        let a = ks_statistic(&real.column(0), &synth.column(0)).unwrap();
        let b = ks_statistic(&flipped.column(0), &synth.column(0)).unwrap();
        assert_eq!(a, b);
    }
}
