//! The VAE itself: a Gaussian encoder, a decoder with one spline quantile
//! head per continuous/ordinal column and one softmax head per discrete
//! column, the training objective and the training loop.
//!
//! Per row the objective is
//!
//! ```text
//! sum_{j continuous} int_0^1 rho_a(x_j - D_j(a, z)) da
//!   + sum_{j discrete} -log pi_{x_j}(z)
//!   + beta * KL(q(z|x) || N(0, I))
//! ```
//!
//! with `z` drawn once per row through the reparameterization. Only the KL
//! term carries `beta`.

use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, ColumnInfo, FORMAT_VERSION};
use crate::data::{one_hot, ColumnKind, Schema, Table};
use crate::error::{Error, Result};
use crate::metrics::quantile_sorted;
use crate::nn::{adam_step, Activation, AdamConfig, AdamState, GradientTape, Mlp};
use crate::spline::{build_spline, chain_to_raw, uniform_knots, SplineCoeffs};

/// Training hyperparameters. Deserialization fills missing fields from
/// [`Default`], so a config file may override any subset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta: f64,
    pub latent_dim: usize,
    /// Number of spline segments `M`; the spline has `M + 1` knots.
    pub knots: usize,
    pub hidden_width: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            beta: 0.5,
            latent_dim: 2,
            knots: 10,
            hidden_width: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("latent_dim", self.latent_dim),
            ("knots", self.knots),
            ("hidden_width", self.hidden_width),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentGaussian {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnOutput {
    Spline(SplineCoeffs),
    Categorical(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderOutput {
    pub columns: Vec<ColumnOutput>,
}

impl DecoderOutput {
    pub fn spline(&self, column: usize) -> Option<&SplineCoeffs> {
        match &self.columns[column] {
            ColumnOutput::Spline(c) => Some(c),
            ColumnOutput::Categorical(_) => None,
        }
    }

    pub fn probabilities(&self, column: usize) -> Option<&[f64]> {
        match &self.columns[column] {
            ColumnOutput::Categorical(p) => Some(p),
            ColumnOutput::Spline(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub crps_recon: f64,
    pub discrete_recon: f64,
    pub kl: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn new(crps_recon: f64, discrete_recon: f64, kl: f64, beta: f64) -> Self {
        LossBreakdown {
            crps_recon,
            discrete_recon,
            kl,
            total: crps_recon + discrete_recon + beta * kl,
        }
    }
}

/// Encoder and decoder networks plus the layout needed to read their
/// outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistVae {
    pub schema: Schema,
    pub knots: Vec<f64>,
    pub latent_dim: usize,
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl DistVae {
    /// Randomly initialized networks: one relu hidden layer each.
    pub fn new<R: Rng + ?Sized>(schema: &Schema, config: &TrainConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let knots = uniform_knots(config.knots);
        let d = config.latent_dim;
        let h = config.hidden_width;
        let encoder = Mlp::glorot(&[schema.encoded_width(), h, 2 * d], Activation::Relu, rng);
        let decoder = Mlp::glorot(&[d, h, decoder_width(schema, knots.len())], Activation::Relu, rng);
        Ok(DistVae {
            schema: schema.clone(),
            knots,
            latent_dim: d,
            encoder,
            decoder,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        crate::spline::validate_knots(&self.knots)?;
        self.encoder.validate()?;
        self.decoder.validate()?;
        if self.encoder.input_dim() != self.schema.encoded_width()
            || self.encoder.output_dim() != 2 * self.latent_dim
            || self.decoder.input_dim() != self.latent_dim
            || self.decoder.output_dim() != decoder_width(&self.schema, self.knots.len())
        {
            return Err(Error::Shape("network shapes do not match schema and latent size".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    /// Posterior `q(z | x)` for a one-hot encoded row.
    pub fn encode(&self, encoded: &[f64]) -> Result<LatentGaussian> {
        let out = self.encoder.predict(encoded)?;
        Ok(split_latent(&out, self.latent_dim))
    }

    /// Posterior for a raw table row (standardized units).
    pub fn encode_row(&self, row: &[f64]) -> Result<LatentGaussian> {
        self.encode(&one_hot(&self.schema, row))
    }

    pub fn decode(&self, z: &[f64]) -> Result<DecoderOutput> {
        let raw = self.decoder.predict(z)?;
        self.read_heads(&raw)
    }

    fn read_heads(&self, raw: &[f64]) -> Result<DecoderOutput> {
        let mut columns = Vec::with_capacity(self.schema.len());
        let mut off = 0;
        for spec in &self.schema.columns {
            match spec.kind {
                ColumnKind::Discrete => {
                    let t = spec.level_count();
                    columns.push(ColumnOutput::Categorical(softmax(&raw[off..off + t])));
                    off += t;
                }
                _ => {
                    let k = self.knots.len();
                    let coeffs = build_spline(raw[off], &raw[off + 1..off + 1 + k], &self.knots)?;
                    columns.push(ColumnOutput::Spline(coeffs));
                    off += 1 + k;
                }
            }
        }
        Ok(DecoderOutput { columns })
    }

    /// Loss of one standardized row for a fixed noise draw. When `grads` is
    /// given, parameter gradients are accumulated into it (encoder, decoder).
    fn row_objective(
        &self,
        row: &[f64],
        encoded: &[f64],
        noise: &[f64],
        beta: f64,
        grads: Option<(&mut GradientTape, &mut GradientTape)>,
    ) -> Result<LossBreakdown> {
        let d = self.latent_dim;
        if noise.len() != d {
            return Err(Error::Shape(format!("noise has {} entries, latent dim is {d}", noise.len())));
        }
        let (enc_out, enc_cache) = self.encoder.forward(encoded)?;
        let latent = split_latent(&enc_out, d);
        let std: Vec<f64> = latent.log_var.iter().map(|lv| (0.5 * lv).exp()).collect();
        let z = reparameterize(&latent, noise);
        let (dec_out, dec_cache) = self.decoder.forward(&z)?;

        let mut crps = 0.0;
        let mut xent = 0.0;
        let mut dec_grad = vec![0.0; dec_out.len()];
        let mut off = 0;
        for (spec, &x) in self.schema.columns.iter().zip(row) {
            match spec.kind {
                ColumnKind::Discrete => {
                    let t = spec.level_count();
                    let logits = &dec_out[off..off + t];
                    let level = x as usize;
                    let lse = log_sum_exp(logits);
                    xent += lse - logits[level];
                    for l in 0..t {
                        let p = (logits[l] - lse).exp();
                        dec_grad[off + l] = p - if l == level { 1.0 } else { 0.0 };
                    }
                    off += t;
                }
                _ => {
                    let k = self.knots.len();
                    let slope_raw = &dec_out[off + 1..off + 1 + k];
                    let coeffs = build_spline(dec_out[off], slope_raw, &self.knots)?;
                    // Half of the closed form: the integral of the check loss.
                    crps += 0.5 * coeffs.crps(x).loss;
                    let (g_gamma, g_raw) = chain_to_raw(&coeffs.crps_grad(x), slope_raw);
                    dec_grad[off] = 0.5 * g_gamma;
                    for (dst, g) in dec_grad[off + 1..off + 1 + k].iter_mut().zip(g_raw) {
                        *dst = 0.5 * g;
                    }
                    off += 1 + k;
                }
            }
        }
        let kl = kl_divergence(&latent);
        let breakdown = LossBreakdown::new(crps, xent, kl, beta);

        if let Some((enc_tape, dec_tape)) = grads {
            let dz = self.decoder.backward_into(&dec_cache, &dec_grad, dec_tape)?;
            let mut enc_grad = vec![0.0; 2 * d];
            for i in 0..d {
                enc_grad[i] = dz[i] + beta * latent.mu[i];
                enc_grad[d + i] = dz[i] * 0.5 * std[i] * noise[i]
                    + beta * 0.5 * (latent.log_var[i].exp() - 1.0);
            }
            self.encoder.backward_into(&enc_cache, &enc_grad, enc_tape)?;
        }
        Ok(breakdown)
    }
}

fn decoder_width(schema: &Schema, knot_count: usize) -> usize {
    schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Discrete => c.level_count(),
            _ => 1 + knot_count,
        })
        .sum()
}

fn split_latent(out: &[f64], d: usize) -> LatentGaussian {
    LatentGaussian {
        mu: out[..d].to_vec(),
        log_var: out[d..2 * d].to_vec(),
    }
}

/// `z = mu + exp(log_var / 2) * noise`.
pub fn reparameterize(latent: &LatentGaussian, noise: &[f64]) -> Vec<f64> {
    latent
        .mu
        .iter()
        .zip(&latent.log_var)
        .zip(noise)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect()
}

/// `KL(N(mu, diag(exp(log_var))) || N(0, I))`.
pub fn kl_divergence(latent: &LatentGaussian) -> f64 {
    let kl: f64 = latent
        .mu
        .iter()
        .zip(&latent.log_var)
        .map(|(m, lv)| m * m + lv.exp() - lv - 1.0)
        .sum::<f64>()
        * 0.5;
    kl.max(0.0)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|l| (l - lse).exp()).collect()
}

fn check_batch(model: &DistVae, batch: &Table, noise: &[Vec<f64>]) -> Result<()> {
    if batch.schema() != &model.schema {
        return Err(Error::Shape("batch schema differs from model schema".into()));
    }
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if noise.len() != batch.n_rows() {
        return Err(Error::Shape(format!(
            "{} noise rows for {} data rows",
            noise.len(),
            batch.n_rows()
        )));
    }
    Ok(())
}

fn non_finite(loss: &LossBreakdown, context: impl FnOnce() -> String) -> Result<()> {
    if !loss.total.is_finite() {
        return Err(Error::NonFinite(format!("{} (loss {loss:?})", context())));
    }
    Ok(())
}

/// Batch-mean objective for fixed noise (`noise[i]` belongs to row `i`).
pub fn elbo_loss(model: &DistVae, batch: &Table, noise: &[Vec<f64>], beta: f64) -> Result<LossBreakdown> {
    check_batch(model, batch, noise)?;
    let mut sum = LossBreakdown::default();
    for i in 0..batch.n_rows() {
        let l = model.row_objective(batch.row(i), &batch.encode_row(i), &noise[i], beta, None)?;
        accumulate(&mut sum, &l);
    }
    let mean = scale(&sum, 1.0 / batch.n_rows() as f64);
    non_finite(&mean, || format!("batch of {} rows", batch.n_rows()))?;
    Ok(mean)
}

/// [`elbo_loss`] together with its gradients w.r.t. the encoder and decoder
/// parameters.
pub fn elbo_loss_and_grad(
    model: &DistVae,
    batch: &Table,
    noise: &[Vec<f64>],
    beta: f64,
) -> Result<(LossBreakdown, GradientTape, GradientTape)> {
    check_batch(model, batch, noise)?;
    let mut enc = GradientTape::zeros_like(&model.encoder);
    let mut dec = GradientTape::zeros_like(&model.decoder);
    let rows: Vec<usize> = (0..batch.n_rows()).collect();
    let encoded: Vec<Vec<f64>> = rows.iter().map(|&i| batch.encode_row(i)).collect();
    let loss = batch_step(model, batch, &encoded, &rows, noise, beta, &mut enc, &mut dec)?;
    Ok((loss, enc, dec))
}

#[allow(clippy::too_many_arguments)]
fn batch_step(
    model: &DistVae,
    table: &Table,
    encoded: &[Vec<f64>],
    rows: &[usize],
    noise: &[Vec<f64>],
    beta: f64,
    enc: &mut GradientTape,
    dec: &mut GradientTape,
) -> Result<LossBreakdown> {
    let mut sum = LossBreakdown::default();
    for (r, &i) in rows.iter().enumerate() {
        let l = model.row_objective(table.row(i), &encoded[i], &noise[r], beta, Some((&mut *enc, &mut *dec)))?;
        accumulate(&mut sum, &l);
    }
    let inv = 1.0 / rows.len() as f64;
    enc.scale(inv);
    dec.scale(inv);
    Ok(scale(&sum, inv))
}

fn accumulate(acc: &mut LossBreakdown, l: &LossBreakdown) {
    acc.crps_recon += l.crps_recon;
    acc.discrete_recon += l.discrete_recon;
    acc.kl += l.kl;
    acc.total += l.total;
}

fn scale(l: &LossBreakdown, f: f64) -> LossBreakdown {
    LossBreakdown {
        crps_recon: l.crps_recon * f,
        discrete_recon: l.discrete_recon * f,
        kl: l.kl * f,
        total: l.total * f,
    }
}

/// Trains on a standardized table (see [`crate::data::standardize`]). Rows
/// are reshuffled every epoch; the last partial batch is kept.
pub fn train(table: &Table, config: &TrainConfig) -> Result<Checkpoint> {
    train_with_progress(table, config, |_, _| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with_progress(
    table: &Table,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &LossBreakdown),
) -> Result<Checkpoint> {
    config.validate()?;
    let scaling = table
        .scaling()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument("train expects a standardized table".into()))?;
    if table.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty table".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = DistVae::new(table.schema(), config, &mut rng)?;
    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut enc_state = AdamState::new(&model.encoder, adam);
    let mut dec_state = AdamState::new(&model.decoder, adam);
    let mut enc_tape = GradientTape::zeros_like(&model.encoder);
    let mut dec_tape = GradientTape::zeros_like(&model.decoder);

    let encoded: Vec<Vec<f64>> = (0..table.n_rows()).map(|i| table.encode_row(i)).collect();
    let mut order: Vec<usize> = (0..table.n_rows()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let d = config.latent_dim;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = LossBreakdown::default();
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let noise: Vec<Vec<f64>> = rows
                .iter()
                .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
                .collect();
            enc_tape.zero();
            dec_tape.zero();
            let loss = batch_step(
                &model,
                table,
                &encoded,
                rows,
                &noise,
                config.beta,
                &mut enc_tape,
                &mut dec_tape,
            )?;
            non_finite(&loss, || format!("diverged at epoch {epoch}, batch {b}"))?;
            adam_step(&mut model.encoder, &enc_tape, &mut enc_state)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}, encoder: {e}")))?;
            adam_step(&mut model.decoder, &dec_tape, &mut dec_state)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}, decoder: {e}")))?;
            accumulate(&mut epoch_sum, &scale(&loss, rows.len() as f64));
        }
        let mean = scale(&epoch_sum, 1.0 / table.n_rows() as f64);
        debug!("epoch {epoch}: {mean:?}");
        on_epoch(epoch, &mean);
        trace.push(mean);
    }

    let columns = column_info(table)?;
    Ok(Checkpoint {
        format_version: FORMAT_VERSION,
        model,
        scaling,
        config: *config,
        columns,
        loss_trace: trace,
    })
}

/// Training-range summaries kept in the checkpoint: the 1%/99% quantiles of
/// each numeric column (standardized units) and the observed levels of each
/// ordinal column (native units).
fn column_info(table: &Table) -> Result<Vec<ColumnInfo>> {
    let scaling = table.scaling().expect("checked by caller");
    table
        .schema()
        .numeric_indices()
        .into_iter()
        .map(|j| {
            let mut col = table.column(j);
            col.sort_by(f64::total_cmp);
            let s = scaling
                .for_column(j)
                .ok_or_else(|| Error::Shape(format!("no scaling for column {j}")))?;
            let ordinal_levels = if table.schema().columns[j].kind == ColumnKind::Ordinal {
                let mut levels: Vec<f64> = col
                    .iter()
                    .map(|v| ((v * s.stddev + s.mean) * 1e9).round() / 1e9)
                    .collect();
                levels.dedup();
                levels
            } else {
                Vec::new()
            };
            Ok(ColumnInfo {
                column: j,
                q01: quantile_sorted(&col, 0.01),
                q99: quantile_sorted(&col, 0.99),
                ordinal_levels,
            })
        })
        .collect()
}
