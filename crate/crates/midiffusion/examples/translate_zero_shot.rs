//! End-to-end zero-shot translation: train briefly on the target modality,
//! then translate an unseen source-modality guide with LMI guidance and with
//! the perturbation baseline, and score both against guide and ground truth.
//!
//! The run is short so the translation is rough; raise the iteration and
//! step counts for better quality.
//!
//! Run with: cargo run --release --example translate_zero_shot

use midiffusion::image::save_image;
use midiffusion::metrics::ssim;
use midiffusion::model::ModelConfig;
use midiffusion::sde::NoiseSchedule;
use midiffusion::synth::{make_pair_dataset, ModalityPairSpec};
use midiffusion::train::{train, TrainConfig};
use midiffusion::translate::{
    translate, translate_perturbation_baseline, TranslateMode, TranslationConfig,
};

fn main() -> midiffusion::Result<()> {
    let spec = ModalityPairSpec {
        seed: 11,
        ..Default::default()
    };
    let pairs = make_pair_dataset(&spec, 65)?;
    let train_f: Vec<_> = pairs[..64].iter().map(|p| p.f.clone()).collect();
    let test = &pairs[64];

    let cfg = TrainConfig {
        batch_size: 8,
        num_iterations: 300,
        model: ModelConfig {
            base_width: 16,
            depth: 2,
            ..Default::default()
        },
        seed: 42,
        checkpoint_every: 0,
        schedule: NoiseSchedule {
            num_steps: 200,
            ..Default::default()
        },
        ..Default::default()
    };
    println!("training on {} target-domain images...", train_f.len());
    let model = train(&train_f, &cfg, None, None)?;

    let out = std::path::Path::new("target/example_out/translate");
    std::fs::create_dir_all(out)?;
    save_image(&test.g, out.join("guide.pgm"))?;
    save_image(&test.f, out.join("target.pgm"))?;

    let tcfg = TranslationConfig {
        schedule: cfg.schedule.clone(),
        seed: 9,
        ..Default::default()
    };
    let guided = translate(&test.g, &model.params, &cfg.model, &tcfg)?;
    save_image(&guided.image, out.join("lmi_guided.pgm"))?;
    guided.write_records(out.join("lmi_guided.jsonl"))?;

    let bcfg = TranslationConfig {
        mode: TranslateMode::PerturbationBaseline,
        t0: 0.5,
        ..tcfg
    };
    let baseline = translate_perturbation_baseline(&test.g, &model.params, &cfg.model, &bcfg)?;
    save_image(&baseline.image, out.join("baseline.pgm"))?;

    println!(
        "LMI-guided: SSIM vs guide {:+.4}, vs target {:+.4}",
        ssim(&guided.image, &test.g)?,
        ssim(&guided.image, &test.f)?
    );
    println!(
        "baseline (t0 = {}): SSIM vs guide {:+.4}, vs target {:+.4}",
        bcfg.t0,
        ssim(&baseline.image, &test.g)?,
        ssim(&baseline.image, &test.f)?
    );
    println!("images under {}", out.display());
    Ok(())
}
