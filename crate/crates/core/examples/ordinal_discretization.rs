//! Fit an ordinal count column, then read its probability mass off the
//! estimated CDF at the observed levels.
//!
//! ```text
//! cargo run --release --example ordinal_discretization
//! ```

use distvae::synthesis::{generate_with, ordinal_cdf, OrdinalRounding};
use distvae::{toy, Checkpoint, TrainConfig};

fn main() -> distvae::Result<()> {
    let real = toy::ordinal_counts(3000, 9);
    let ckpt = Checkpoint::fit(&real, &TrainConfig::default())?;

    let cdf = ordinal_cdf(&ckpt, 0, 5000, 0)?;
    let counts = real.column(0);
    println!("{:>5} {:>10} {:>10}", "level", "model cdf", "empirical");
    for (level, p) in cdf.levels.iter().zip(&cdf.cum_probs) {
        let emp = counts.iter().filter(|&&v| v <= *level).count() as f64 / counts.len() as f64;
        println!("{level:5} {p:10.4} {emp:10.4}");
    }

    let nearest = generate_with(&ckpt, 5, 1, OrdinalRounding::NearestLevel)?;
    let decimal = generate_with(&ckpt, 5, 1, OrdinalRounding::FirstDecimal)?;
    println!("nearest level: {:?}", nearest.column(0));
    println!("first decimal: {:?}", decimal.column(0));
    Ok(())
}
