//! Quality metrics on synthetic pairs: MSE, PSNR, SSIM against guide and
//! target, and global mutual information, rendered as the standard CSV
//! report.
//!
//! Run with: cargo run --release --example evaluate_metrics

use midiffusion::metrics::{evaluate_run, global_mi, mse, psnr, ssim};
use midiffusion::synth::{make_pair_dataset, ModalityPairSpec};

fn main() -> midiffusion::Result<()> {
    let spec = ModalityPairSpec {
        seed: 5,
        ..Default::default()
    };
    let pairs = make_pair_dataset(&spec, 4)?;

    let p = &pairs[0];
    println!("single pair, G (inverted) vs F (identity):");
    println!("  mse  {:.2} (8-bit scale)", mse(&p.g, &p.f)?);
    println!("  psnr {:.2} dB", psnr(&p.g, &p.f)?);
    println!("  ssim {:+.4}", ssim(&p.g, &p.f)?);
    // MI is invariant to intensity inversion, so despite opposite
    // appearance the pair remains statistically similar.
    println!("  mi   {:.4} nats", global_mi(&p.g, &p.f, 64)?);
    println!("  mi(F, F) = {:.4} nats (entropy)", global_mi(&p.f, &p.f, 64)?);

    // Report as if F itself were a perfect prediction.
    let preds: Vec<_> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("{i:04}"), p.f.clone()))
        .collect();
    let guides: Vec<_> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("{i:04}"), p.g.clone()))
        .collect();
    let report = evaluate_run(&preds, &guides, &preds)?;
    println!("\n{}", report.to_csv());
    Ok(())
}
