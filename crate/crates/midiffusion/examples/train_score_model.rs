//! Short denoising-score-matching training run on target-domain images
//! only, with the LMI self-guidance channel. Writes the loss log and a
//! checkpoint.
//!
//! Run with: cargo run --release --example train_score_model

use midiffusion::model::ModelConfig;
use midiffusion::synth::{make_pair_dataset, ModalityPairSpec};
use midiffusion::train::{moving_average, train, TrainConfig};

fn main() -> midiffusion::Result<()> {
    let spec = ModalityPairSpec {
        seed: 11,
        ..Default::default()
    };
    // Zero-shot setup: training sees the F modality only.
    let train_f: Vec<_> = make_pair_dataset(&spec, 64)?
        .into_iter()
        .map(|p| p.f)
        .collect();

    let cfg = TrainConfig {
        batch_size: 8,
        num_iterations: 200,
        model: ModelConfig {
            base_width: 16,
            depth: 2,
            ..Default::default()
        },
        seed: 42,
        checkpoint_every: 100,
        ..Default::default()
    };
    let out = std::path::Path::new("target/example_out/train");
    let result = train(&train_f, &cfg, Some(out), None)?;
    println!(
        "loss: first 20 avg {:.4} -> last 20 avg {:.4} (untrained expectation 0.5)",
        moving_average(&result.losses, 20, 19),
        moving_average(&result.losses, 20, cfg.num_iterations - 1),
    );
    println!("artifacts under {}", out.display());
    Ok(())
}
