use midiffusion::lmi::{lmi_map, LmiConfig};
use midiffusion::model::{self, ModelConfig};
use midiffusion::train::{dsm_loss_and_grad, TrainConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

fn rand_image(seed: u64, n: usize) -> Array2<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, n), |_| rng.gen::<f64>())
}

fn main() {
    let g = rand_image(1, 32);
    let p = rand_image(2, 32);
    let cfg = LmiConfig::default();
    let t = Instant::now();
    for _ in 0..20 { lmi_map(&g, &p, &cfg).unwrap(); }
    println!("lmi_map 32x32: {:.2} ms", t.elapsed().as_secs_f64() * 1000.0 / 20.0);

    for width in [16usize, 32] {
        let mcfg = ModelConfig { base_width: width, depth: 2, ..Default::default() };
        let params = model::init(&mcfg, 0).unwrap();
        let lmi = rand_image(3, 32);
        let t = Instant::now();
        for _ in 0..20 { model::forward(&params, &mcfg, &g, &lmi, 1.0).unwrap(); }
        let fwd = t.elapsed().as_secs_f64() * 1000.0 / 20.0;
        let t = Instant::now();
        for _ in 0..10 {
            let (_, cache) = model::forward_cached(&params, &mcfg, &g, &lmi, 1.0).unwrap();
            model::backward(&params, &mcfg, &cache, &g).unwrap();
        }
        let fwdbwd = t.elapsed().as_secs_f64() * 1000.0 / 10.0;
        println!("model w={width}: fwd {fwd:.2} ms, fwd+bwd {fwdbwd:.2} ms");
    }

    // One full training iteration at batch 4, width 16.
    let tc = TrainConfig {
        batch_size: 4,
        model: ModelConfig { base_width: 16, depth: 2, ..Default::default() },
        ..Default::default()
    };
    let params = model::init(&tc.model, 0).unwrap();
    let data: Vec<_> = (0..4).map(|i| rand_image(100 + i, 32)).collect();
    let t = Instant::now();
    for it in 0..10 { dsm_loss_and_grad(&params, &data, it, &tc).unwrap(); }
    println!("train iter (batch 4, w16): {:.2} ms", t.elapsed().as_secs_f64() * 1000.0 / 10.0);
}
