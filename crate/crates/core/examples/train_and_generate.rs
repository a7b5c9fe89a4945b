//! Fit a model to a mixed-type toy table, sample from it and compare
//! marginals.
//!
//! ```text
//! cargo run --release --example train_and_generate
//! ```

use std::time::Instant;

use distvae::metrics::ks_statistic;
use distvae::synthesis::generate;
use distvae::{toy, Checkpoint, TrainConfig};

fn main() -> distvae::Result<()> {
    let real = toy::mixed(5000, 1);
    let config = TrainConfig::default();
    let start = Instant::now();
    let ckpt = Checkpoint::fit(&real, &config)?;
    println!(
        "trained {} epochs in {:.1?}, final loss {:.4}",
        config.epochs,
        start.elapsed(),
        ckpt.loss_trace.last().map_or(f64::NAN, |l| l.total)
    );

    let synth = generate(&ckpt, 5000, 2)?;
    let schema = real.schema();
    for j in schema.numeric_indices() {
        let ks = ks_statistic(&real.column(j), &synth.column(j))?;
        println!("{:>8}: K-S {ks:.4}", schema.columns[j].name);
    }
    for j in schema.discrete_indices() {
        let spec = &schema.columns[j];
        for (level, name) in spec.levels.iter().enumerate() {
            let freq = |t: &distvae::Table| {
                t.column(j).iter().filter(|&&v| v == level as f64).count() as f64 / t.n_rows() as f64
            };
            println!("{:>8}={name}: real {:.3}  synthetic {:.3}", spec.name, freq(&real), freq(&synth));
        }
    }
    Ok(())
}
