//! Variance-exploding SDE: noise schedule, forward perturbation kernel,
//! denoising score-matching target, and the reverse-time Euler-Maruyama
//! solver.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::image::{save_pgm, Image};

/// Geometric sigma schedule over t in [0, T], T fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub num_steps: usize,
}

pub const TOTAL_TIME: f64 = 1.0;

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self {
            sigma_min: 0.01,
            sigma_max: 10.0,
            num_steps: 500,
        }
    }
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min > 0.0 && self.sigma_min < self.sigma_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < sigma_min < sigma_max, got {} and {}",
                self.sigma_min, self.sigma_max
            )));
        }
        if self.num_steps < 2 {
            return Err(Error::InvalidConfig("num_steps must be >= 2".into()));
        }
        Ok(())
    }

    /// sigma(t) = sigma_min * (sigma_max / sigma_min)^(t/T), strictly
    /// increasing in t.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        if !(0.0..=TOTAL_TIME).contains(&t) {
            return Err(Error::InvalidConfig(format!("t={t} outside [0, {TOTAL_TIME}]")));
        }
        Ok(self.sigma_unchecked(t))
    }

    #[inline]
    fn sigma_unchecked(&self, t: f64) -> f64 {
        self.sigma_min * (self.sigma_max / self.sigma_min).powf(t / TOTAL_TIME)
    }

    pub fn dt(&self) -> f64 {
        TOTAL_TIME / self.num_steps as f64
    }

    /// Physical time at reverse-step index n: t_n = T - n*dt, so the chain
    /// visits sigma_max first and ends at sigma(0) = sigma_min.
    pub fn time_of_step(&self, step: usize) -> f64 {
        TOTAL_TIME - step as f64 * self.dt()
    }

    /// Step size of the reverse Euler update at step n:
    /// epsilon = sigma(t_n)^2 - sigma(t_{n+1})^2, always positive.
    pub fn epsilon(&self, step: usize) -> f64 {
        let s0 = self.sigma_unchecked(self.time_of_step(step));
        let s1 = self.sigma_unchecked(self.time_of_step(step + 1));
        s0 * s0 - s1 * s1
    }
}

/// Draw an i.i.d. standard-normal field, deterministic for a given rng state.
pub fn standard_normal_field(shape: (usize, usize), rng: &mut ChaCha12Rng) -> Image {
    let mut z = Array2::zeros(shape);
    for v in z.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    z
}

/// Sample the forward VE marginal x_t ~ N(x0, sigma(t)^2 I).
pub fn perturb(x0: &Image, t: f64, schedule: &NoiseSchedule, rng: &mut ChaCha12Rng) -> Result<Image> {
    if !(t > 0.0 && t <= TOTAL_TIME) {
        return Err(Error::InvalidConfig(format!("t={t} outside (0, {TOTAL_TIME}]")));
    }
    let sigma = schedule.sigma_unchecked(t);
    let z = standard_normal_field(x0.dim(), rng);
    Ok(x0 + &(z * sigma))
}

/// Score of the Gaussian perturbation kernel: (x0 - xt) / sigma(t)^2.
pub fn dsm_target(x0: &Image, xt: &Image, t: f64, schedule: &NoiseSchedule) -> Result<Image> {
    if x0.dim() != xt.dim() {
        return Err(Error::ShapeMismatch {
            expected: x0.dim(),
            got: xt.dim(),
        });
    }
    let sigma = schedule.sigma(t)?;
    Ok((x0 - xt) / (sigma * sigma))
}

/// State of one reverse-time solver chain.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Image,
    pub step_index: usize,
    pub rng: ChaCha12Rng,
}

impl SolverState {
    /// Start a chain from pure noise, x ~ N(0, sigma_max^2 I).
    pub fn from_noise(shape: (usize, usize), schedule: &NoiseSchedule, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let x = standard_normal_field(shape, &mut rng) * schedule.sigma_max;
        Self {
            x,
            step_index: 0,
            rng,
        }
    }

    /// Start from a given state at a given step index.
    pub fn from_image(x: Image, step_index: usize, seed: u64) -> Self {
        Self {
            x,
            step_index,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }
}

/// One reverse Euler-Maruyama update:
/// x' = x + epsilon * score + sqrt(epsilon) * z, z ~ N(0, I).
pub fn reverse_step(state: &mut SolverState, score: &Image, schedule: &NoiseSchedule) -> Result<()> {
    let z = standard_normal_field(state.x.dim(), &mut state.rng);
    reverse_step_with_noise(state, score, schedule, &z)
}

/// Reverse update with an explicit noise field (test hook; [`reverse_step`]
/// draws the field from the chain rng).
pub fn reverse_step_with_noise(
    state: &mut SolverState,
    score: &Image,
    schedule: &NoiseSchedule,
    z: &Image,
) -> Result<()> {
    if state.step_index >= schedule.num_steps {
        return Err(Error::InvalidConfig(format!(
            "step_index {} past the end of the {}-step schedule",
            state.step_index, schedule.num_steps
        )));
    }
    if score.dim() != state.x.dim() {
        return Err(Error::ShapeMismatch {
            expected: state.x.dim(),
            got: score.dim(),
        });
    }
    if score.iter().any(|v| !v.is_finite()) {
        return Err(Error::ScoreDiverged);
    }
    let eps = schedule.epsilon(state.step_index);
    let sqrt_eps = eps.sqrt();
    ndarray::Zip::from(&mut state.x)
        .and(score)
        .and(z)
        .for_each(|x, &s, &n| *x += eps * s + sqrt_eps * n);
    state.step_index += 1;
    Ok(())
}

/// Output of a full reverse run.
pub struct SampleOutput {
    pub image: Image,
    /// `(step, state)` snapshots kept every `keep_every` steps (the initial
    /// state is step 0); empty when not requested.
    pub intermediates: Vec<(usize, Image)>,
}

/// Run the reverse chain to t = 0 with a caller-supplied score function
/// `score_fn(x, t)`. Starts from `init` when given, else from pure noise.
pub fn sample<F>(
    mut score_fn: F,
    schedule: &NoiseSchedule,
    shape: (usize, usize),
    init: Option<Image>,
    seed: u64,
    keep_every: Option<usize>,
) -> Result<SampleOutput>
where
    F: FnMut(&Image, f64) -> Result<Image>,
{
    schedule.validate()?;
    let mut state = match init {
        Some(x) => SolverState::from_image(x, 0, seed),
        None => SolverState::from_noise(shape, schedule, seed),
    };
    let mut intermediates = Vec::new();
    for n in 0..schedule.num_steps {
        if let Some(m) = keep_every {
            if m > 0 && n % m == 0 {
                intermediates.push((n, state.x.clone()));
            }
        }
        let t = schedule.time_of_step(n);
        let score = score_fn(&state.x, t)?;
        reverse_step(&mut state, &score, schedule)?;
    }
    Ok(SampleOutput {
        image: state.x,
        intermediates,
    })
}

/// Dump kept intermediates as PGM frames plus an index CSV
/// (step, t, sigma, epsilon).
pub fn dump_trajectory(
    out: &SampleOutput,
    schedule: &NoiseSchedule,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut index = String::from("step,t,sigma,epsilon\n");
    for (step, img) in &out.intermediates {
        let t = schedule.time_of_step(*step);
        let sigma = schedule.sigma(t)?;
        let eps = schedule.epsilon(*step);
        index.push_str(&format!("{step},{t},{sigma},{eps}\n"));
        // Frames are raw solver states; scale through the data range for
        // inspection.
        let vis = crate::image::min_max_scale(img);
        save_pgm(&vis, &dir.join(format!("step_{step:05}.pgm")))?;
    }
    let mut f = fs::File::create(dir.join("index.csv"))?;
    f.write_all(index.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn sigma_endpoints_and_midpoint() {
        let s = NoiseSchedule::default();
        assert_abs_diff_eq!(s.sigma(0.0).unwrap(), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(s.sigma(1.0).unwrap(), 10.0, epsilon = 1e-12);
        // Geometric midpoint.
        assert_abs_diff_eq!(
            s.sigma(0.5).unwrap(),
            (0.01f64 * 10.0).sqrt(),
            epsilon = 1e-12
        );
        assert!(s.sigma(1.5).is_err());
        assert!(s.sigma(-0.1).is_err());
    }

    #[test]
    fn sigma_monotone() {
        let s = NoiseSchedule::default();
        let mut prev = 0.0;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let v = s.sigma(t).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn epsilon_positive_over_the_whole_grid() {
        let s = NoiseSchedule::default();
        for n in 0..s.num_steps {
            assert!(s.epsilon(n) > 0.0, "step {n}");
        }
        // First reverse step matches the closed form.
        let expect = s.sigma_max.powi(2) - s.sigma(1.0 - s.dt()).unwrap().powi(2);
        assert_abs_diff_eq!(s.epsilon(0), expect, epsilon = 1e-12);
    }

    #[test]
    fn perturb_deterministic_per_seed() {
        let s = NoiseSchedule::default();
        let x0 = Array2::from_elem((8, 8), 0.5);
        let a = perturb(&x0, 0.4, &s, &mut ChaCha12Rng::seed_from_u64(7)).unwrap();
        let b = perturb(&x0, 0.4, &s, &mut ChaCha12Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perturb_moments_match_the_marginal() {
        let s = NoiseSchedule::default();
        let x0 = Array2::from_elem((1, 1), 0.3);
        for &t in &[0.25, 0.5, 1.0] {
            let sigma = s.sigma(t).unwrap();
            let n = 10_000;
            let mut rng = ChaCha12Rng::seed_from_u64(3);
            let draws: Vec<f64> = (0..n)
                .map(|_| perturb(&x0, t, &s, &mut rng).unwrap()[[0, 0]])
                .collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!(
                (mean - 0.3).abs() <= 4.0 * sigma / 100.0,
                "t={t}: mean {mean}"
            );
            assert!(
                (var - sigma * sigma).abs() <= 0.05 * sigma * sigma,
                "t={t}: var {var} vs {}",
                sigma * sigma
            );
        }
    }

    #[test]
    fn dsm_target_formula() {
        let s = NoiseSchedule::default();
        let x0 = Array2::from_elem((1, 1), 0.5);
        let xt = Array2::from_elem((1, 1), 0.7);
        // Solve sigma(t) = 0.1: t = ln(10)/ln(1000).
        let t = (0.1f64 / 0.01).ln() / (10.0f64 / 0.01).ln();
        let sigma = s.sigma(t).unwrap();
        assert_abs_diff_eq!(sigma, 0.1, epsilon = 1e-12);
        let target = dsm_target(&x0, &xt, t, &s).unwrap();
        assert_abs_diff_eq!(target[[0, 0]], -20.0, epsilon = 1e-9);
        // Exact match gives a zero field.
        let zero = dsm_target(&x0, &x0, t, &s).unwrap();
        assert_eq!(zero[[0, 0]], 0.0);
    }

    #[test]
    fn dsm_target_quarter_when_sigma_doubles() {
        let s = NoiseSchedule::default();
        let x0 = Array2::from_elem((2, 2), 0.2);
        let xt = Array2::from_elem((2, 2), 0.9);
        let t1 = 0.3;
        // sigma(t) doubles when t increases by ln(2)/ln(sigma_max/sigma_min).
        let t2 = t1 + 2.0f64.ln() / (10.0f64 / 0.01).ln();
        let a = dsm_target(&x0, &xt, t1, &s).unwrap();
        let b = dsm_target(&x0, &xt, t2, &s).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!(*y, *x / 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn null_update_with_zero_score_and_zero_noise() {
        let s = NoiseSchedule::default();
        let x = Array2::from_elem((4, 4), 0.25);
        let mut state = SolverState::from_image(x.clone(), 0, 0);
        let zero = Array2::zeros((4, 4));
        reverse_step_with_noise(&mut state, &zero, &s, &zero).unwrap();
        assert_eq!(state.x, x);
        assert_eq!(state.step_index, 1);
    }

    #[test]
    fn non_finite_score_rejected() {
        let s = NoiseSchedule::default();
        let mut state = SolverState::from_image(Array2::zeros((2, 2)), 0, 0);
        let mut score = Array2::zeros((2, 2));
        score[[0, 0]] = f64::NAN;
        assert!(matches!(
            reverse_step(&mut state, &score, &s),
            Err(Error::ScoreDiverged)
        ));
    }

    #[test]
    fn two_step_zero_score_chain_returns_init_under_zero_noise() {
        let s = NoiseSchedule {
            num_steps: 2,
            ..Default::default()
        };
        let init = Array2::from_elem((3, 3), 0.6);
        let mut state = SolverState::from_image(init.clone(), 0, 0);
        let zero = Array2::zeros((3, 3));
        for _ in 0..2 {
            reverse_step_with_noise(&mut state, &zero, &s, &zero).unwrap();
        }
        assert_eq!(state.x, init);
    }

    #[test]
    fn sample_deterministic_per_seed() {
        let s = NoiseSchedule {
            num_steps: 20,
            ..Default::default()
        };
        let run = |seed| {
            sample(
                |_x, _t| Ok(Array2::zeros((4, 4))),
                &s,
                (4, 4),
                None,
                seed,
                Some(5),
            )
            .unwrap()
        };
        let a = run(9);
        let b = run(9);
        assert_eq!(a.image, b.image);
        assert_eq!(a.intermediates.len(), 4);
        let c = run(10);
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn analytic_gaussian_score_recovers_target_moments() {
        // Reverse the chain under the exact score of a per-pixel N(mu, s^2)
        // data distribution; the output marginal must be close to
        // N(mu, s^2 + sigma_min^2).
        let schedule = NoiseSchedule::default();
        let (mu, sd) = (0.5, 0.1);
        let shape = (16, 32); // 512 independent pixels
        let out = sample(
            |x: &Image, t: f64| {
                let sigma = schedule.sigma(t)?;
                let denom = sd * sd + sigma * sigma;
                Ok(x.mapv(|v| (mu - v) / denom))
            },
            &schedule,
            shape,
            None,
            2024,
            None,
        )
        .unwrap();
        let n = (shape.0 * shape.1) as f64;
        let mean = out.image.iter().sum::<f64>() / n;
        let var = out.image.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let target_sd = (sd * sd + schedule.sigma_min * schedule.sigma_min).sqrt();
        assert!((mean - mu).abs() <= 0.05, "mean {mean}");
        assert!(
            (var.sqrt() - target_sd).abs() <= 0.1 * target_sd,
            "std {} vs {target_sd}",
            var.sqrt()
        );
    }

    #[test]
    fn trajectory_dump_writes_frames_and_index() {
        let s = NoiseSchedule {
            num_steps: 10,
            ..Default::default()
        };
        let out = sample(
            |_x, _t| Ok(Array2::zeros((4, 4))),
            &s,
            (4, 4),
            None,
            1,
            Some(2),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        dump_trajectory(&out, &s, dir.path()).unwrap();
        assert!(dir.path().join("index.csv").exists());
        assert!(dir.path().join("step_00000.pgm").exists());
        let index = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
        assert_eq!(index.lines().count(), 1 + 5);
        assert!(index.starts_with("step,t,sigma,epsilon"));
    }
}
