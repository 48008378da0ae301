//! Generate a paired synthetic modality dataset and write the on-disk
//! layout (train_F/, test_G/, test_F/, manifest.csv).
//!
//! Run with: cargo run --release --example generate_dataset

use midiffusion::synth::{write_dataset, DatasetSpec, ModalityPairSpec};

fn main() -> midiffusion::Result<()> {
    let spec = DatasetSpec {
        pair: ModalityPairSpec {
            seed: 7,
            ..Default::default()
        },
        train_count: 32,
        test_count: 8,
    };
    let out = std::path::Path::new("target/example_out/dataset");
    write_dataset(&spec, out)?;
    println!(
        "wrote {} train images and {} test pairs under {}",
        spec.train_count,
        spec.test_count,
        out.display()
    );
    println!("structure: {}", spec.pair.structure.name());
    println!(
        "appearance: F={} G={}",
        spec.pair.appearance_f.render(),
        spec.pair.appearance_g.render()
    );
    Ok(())
}
