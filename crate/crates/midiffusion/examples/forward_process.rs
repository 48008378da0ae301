//! The forward noising process: geometric sigma schedule and the Gaussian
//! perturbation kernel, with a Monte Carlo check of the marginal moments.
//!
//! Run with: cargo run --release --example forward_process

use midiffusion::sde::{perturb, NoiseSchedule};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() -> midiffusion::Result<()> {
    let schedule = NoiseSchedule::default();
    println!("sigma(t) over the geometric schedule:");
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        println!("  t={t:.2}  sigma={:.4}", schedule.sigma(t)?);
    }

    let x0 = Array2::from_elem((1, 1), 0.3);
    for t in [0.25, 0.5, 1.0] {
        let sigma = schedule.sigma(t)?;
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let n = 10_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| Ok(perturb(&x0, t, &schedule, &mut rng)?[[0, 0]]))
            .collect::<midiffusion::Result<_>>()?;
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        println!(
            "t={t:.2}: sample mean {mean:+.4} (x0 = 0.3), sample std {:.4} (sigma = {sigma:.4})",
            var.sqrt()
        );
    }
    Ok(())
}
