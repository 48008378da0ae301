use midiffusion::metrics::ssim;
use midiffusion::model::ModelConfig;
use midiffusion::synth::{make_pair_dataset, ModalityPairSpec};
use midiffusion::train::{moving_average, train, TrainConfig};
use midiffusion::translate::{translate, translate_perturbation_baseline, TranslateMode, TranslationConfig};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(2000);
    let n_test: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(8);
    let lr: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(2e-3);
    let batch: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(8);

    let spec = ModalityPairSpec { seed: 11, ..Default::default() };
    let pairs = make_pair_dataset(&spec, 256 + 64).unwrap();
    let train_f: Vec<_> = pairs[..256].iter().map(|p| p.f.clone()).collect();

    let cfg = TrainConfig {
        batch_size: batch,
        num_iterations: iters,
        learning_rate: lr,
        seed: 42,
        model: ModelConfig { base_width: 16, depth: 2, ..Default::default() },
        checkpoint_every: 0,
        ..Default::default()
    };
    let t = Instant::now();
    let result = train(&train_f, &cfg, None, None).unwrap();
    let train_secs = t.elapsed().as_secs_f64();
    let ma100 = moving_average(&result.losses, 100, 99.min(iters - 1));
    let ma_end = moving_average(&result.losses, 100, iters - 1);
    println!("train {train_secs:.0}s  MA(100)={ma100:.4}  MA(end)={ma_end:.4}  ratio={:.3}", ma_end / ma100);

    // Head-to-head on a few test pairs.
    let test = &pairs[256..256 + n_test];
    let tcfg = TranslationConfig { seed: 7, ..Default::default() };
    let t = Instant::now();
    let mut ssim_lmi = 0.0;
    let mut ssim_tar_lmi = 0.0;
    for (i, p) in test.iter().enumerate() {
        let mut c = tcfg.clone();
        c.seed = 1000 + i as u64;
        let out = translate(&p.g, &result.params, &cfg.model, &c).unwrap();
        ssim_lmi += ssim(&out.image, &p.g).unwrap() / n_test as f64;
        ssim_tar_lmi += ssim(&out.image, &p.f).unwrap() / n_test as f64;
    }
    println!("lmi mode: {:.1}s/img  mean SSIM-src {ssim_lmi:.4}  SSIM-tar {ssim_tar_lmi:.4}",
             t.elapsed().as_secs_f64() / n_test as f64);

    for t0 in [0.3, 0.5, 0.7] {
        let mut s_src = 0.0;
        let mut s_tar = 0.0;
        for (i, p) in test.iter().enumerate() {
            let c = TranslationConfig {
                seed: 1000 + i as u64,
                mode: TranslateMode::PerturbationBaseline,
                t0,
                ..Default::default()
            };
            let out = translate_perturbation_baseline(&p.g, &result.params, &cfg.model, &c).unwrap();
            s_src += ssim(&out.image, &p.g).unwrap() / n_test as f64;
            s_tar += ssim(&out.image, &p.f).unwrap() / n_test as f64;
        }
        println!("baseline t0={t0}: mean SSIM-src {s_src:.4}  SSIM-tar {s_tar:.4}");
    }
}
