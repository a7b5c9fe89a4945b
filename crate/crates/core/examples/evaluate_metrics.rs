//! Score a synthetic table for fidelity, utility and privacy, and print the
//! report as JSON.
//!
//! ```text
//! cargo run --release --example evaluate_metrics
//! ```

use distvae::metrics::{evaluate, EvalOptions};
use distvae::synthesis::generate;
use distvae::{toy, Checkpoint, TrainConfig};

fn main() -> distvae::Result<()> {
    let train = toy::mixed(3000, 1);
    let test = toy::mixed(1000, 2);
    let config = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let ckpt = Checkpoint::fit(&train, &config)?;
    let synth = generate(&ckpt, train.n_rows(), 3)?;

    // Regress `skewed`, classify `group`.
    let opts = EvalOptions::new(1, 2);
    let report = evaluate(&train, &test, &synth, &opts)?;
    print!("{}", report.to_json());
    Ok(())
}
