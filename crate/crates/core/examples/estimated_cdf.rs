//! Fit a single Gaussian column and compare the Monte Carlo estimate of its
//! CDF with the true normal CDF.
//!
//! ```text
//! cargo run --release --example estimated_cdf
//! ```

use distvae::synthesis::estimate_cdf;
use distvae::{toy, Checkpoint, TrainConfig};

fn main() -> distvae::Result<()> {
    let real = toy::gaussian(3000, 3.0, 1.0, 5);
    let ckpt = Checkpoint::fit(&real, &TrainConfig::default())?;

    let grid: Vec<f64> = (0..=12).map(|i| 0.0 + 0.5 * i as f64).collect();
    let curve = estimate_cdf(&ckpt, 0, &grid, 5000, 0)?;
    println!("{:>6} {:>10} {:>10}", "x", "estimate", "truth");
    for (x, f) in curve.grid.iter().zip(&curve.values) {
        println!("{x:6.2} {f:10.4} {:10.4}", toy::normal_cdf(x - 3.0));
    }
    Ok(())
}
