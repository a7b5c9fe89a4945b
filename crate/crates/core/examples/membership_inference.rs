//! Run the shadow-model membership inference attack against a trained
//! synthesizer. Accuracy and AUC near 0.5 mean the attack cannot tell
//! training records from held-out ones.
//!
//! ```text
//! cargo run --release --example membership_inference
//! ```

use distvae::metrics::{membership_inference, MiaConfig};
use distvae::{toy, Checkpoint, TrainConfig};

fn main() -> distvae::Result<()> {
    let train = toy::mixed(2000, 1);
    let test = toy::mixed(2000, 2);
    let config = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let target = Checkpoint::fit(&train, &config)?;

    let mia = MiaConfig {
        class_column: 2,
        train_config: config,
        seed: 4,
    };
    let report = membership_inference(&target, &train, &test, &mia)?;
    println!("attack accuracy {:.4}  AUC {:.4}", report.accuracy, report.auc);
    Ok(())
}
