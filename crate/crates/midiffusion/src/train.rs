//! Denoising score matching on target-domain images, with the LMI map of
//! (clean image, perturbed image) as the conditioning channel.
//!
//! Per batch item: draw t uniformly on [0.01 T, T], perturb the clean image
//! to x_t, compute the LMI map with the clean image as its own guide, and
//! regress the network output toward the perturbation-kernel score. The loss
//! is weighted by sigma(t)^2, which together with the sigma-scaled output
//! parameterization keeps every term O(1):
//!
//! ```text
//! loss = 1/2 * sigma^2 * mean((out/sigma - (x0 - x_t)/sigma^2)^2)
//! ```
//!
//! With an untrained (zero-output) network the expected loss is 1/2.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::lmi::{lmi_map, LmiConfig};
use crate::model::{self, ModelConfig, ParamSet};
use crate::sde::{dsm_target, perturb, NoiseSchedule, TOTAL_TIME};
use crate::synth::split_seed;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Fraction of T below which t is never sampled, keeping 1/sigma^2 bounded.
pub const T_FLOOR_FRAC: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub num_iterations: usize,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    pub seed: u64,
    pub lmi: LmiConfig,
    pub schedule: NoiseSchedule,
    pub model: ModelConfig,
    /// Checkpoint cadence in iterations; 0 disables periodic checkpoints.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            num_iterations: 2000,
            learning_rate: 2e-3,
            adam_betas: (0.9, 0.999),
            seed: 0,
            lmi: LmiConfig::default(),
            schedule: NoiseSchedule::default(),
            model: ModelConfig::default(),
            checkpoint_every: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        self.lmi.validate()?;
        self.schedule.validate()?;
        self.model.validate()
    }
}

struct ItemResult {
    loss: f64,
    grads: ParamSet,
}

/// Loss and gradients of one batch item. The item seed fixes the time draw
/// and the perturbation noise, so items are independent of evaluation order.
fn item_loss(
    params: &ParamSet,
    x0: &Image,
    item_seed: u64,
    cfg: &TrainConfig,
    with_grads: bool,
) -> Result<ItemResult> {
    let mut rng = ChaCha12Rng::seed_from_u64(item_seed);
    let t_floor = T_FLOOR_FRAC * TOTAL_TIME;
    let t = t_floor + rng.gen::<f64>() * (TOTAL_TIME - t_floor);
    let sigma = cfg.schedule.sigma(t)?;
    let xt = perturb(x0, t, &cfg.schedule, &mut rng)?;
    // Training-time self-guidance: the clean image guides its own
    // perturbation.
    let lmi = lmi_map(x0, &xt, &cfg.lmi)?;
    let (out, cache) = model::forward_cached(params, &cfg.model, &xt, &lmi.values, sigma)?;
    let target = dsm_target(x0, &xt, t, &cfg.schedule)?;

    let pixels = out.len() as f64;
    let mut loss = 0.0;
    let mut d_out = out.clone();
    ndarray::Zip::from(&mut d_out)
        .and(&out)
        .and(&target)
        .for_each(|d, &o, &tg| {
            let resid = o / sigma - tg;
            loss += 0.5 * sigma * sigma * resid * resid;
            // dloss/dout for the item-mean loss.
            *d = sigma * resid / pixels;
        });
    loss /= pixels;

    let grads = if with_grads {
        model::backward(params, &cfg.model, &cache, &d_out)?.0
    } else {
        ParamSet::zeros(&cfg.model)?
    };
    Ok(ItemResult { loss, grads })
}

fn batch_seeds(cfg: &TrainConfig, iteration: u64, n: usize) -> Vec<u64> {
    (0..n)
        .map(|i| split_seed(split_seed(cfg.seed, 0x7472_6169 ^ iteration), i as u64))
        .collect()
}

/// Batch-mean denoising score matching loss.
pub fn dsm_loss(
    params: &ParamSet,
    batch: &[Image],
    iteration: u64,
    cfg: &TrainConfig,
) -> Result<f64> {
    dsm_eval(params, batch, iteration, cfg, false).map(|(l, _)| l)
}

/// Batch-mean loss plus parameter gradients.
pub fn dsm_loss_and_grad(
    params: &ParamSet,
    batch: &[Image],
    iteration: u64,
    cfg: &TrainConfig,
) -> Result<(f64, ParamSet)> {
    dsm_eval(params, batch, iteration, cfg, true)
}

fn dsm_eval(
    params: &ParamSet,
    batch: &[Image],
    iteration: u64,
    cfg: &TrainConfig,
    with_grads: bool,
) -> Result<(f64, ParamSet)> {
    if batch.is_empty() {
        return Err(Error::Dataset("empty batch".into()));
    }
    let seeds = batch_seeds(cfg, iteration, batch.len());
    let items: Vec<Result<ItemResult>> = batch
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(x0, &seed)| item_loss(params, x0, seed, cfg, with_grads))
        .collect();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut grads = ParamSet::zeros(&cfg.model)?;
    // Accumulate in item order so the result is independent of scheduling.
    for item in items {
        let item = item?;
        loss += item.loss * scale;
        grads.axpy(scale, &item.grads);
    }
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            iteration: iteration as usize,
            value: loss,
        });
    }
    Ok((loss, grads))
}

/// Adaptive-moment optimizer state.
pub struct Adam {
    m: ParamSet,
    v: ParamSet,
    t: u64,
    betas: (f64, f64),
    lr: f64,
}

const ADAM_EPS: f64 = 1e-8;

impl Adam {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            m: ParamSet::zeros(&cfg.model)?,
            v: ParamSet::zeros(&cfg.model)?,
            t: 0,
            betas: cfg.adam_betas,
            lr: cfg.learning_rate,
        })
    }

    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamSet) {
        self.t += 1;
        let (b1, b2) = self.betas;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        let g_all = grads.iter_all();
        let mut k = 0usize;
        let mut m_slices = self.m.tensors_mut();
        let mut v_slices = self.v.tensors_mut();
        for (slot, (_, p)) in params.tensors_mut().into_iter().enumerate() {
            let m = &mut m_slices[slot].1;
            let v = &mut v_slices[slot].1;
            for i in 0..p.len() {
                let g = g_all[k + i];
                m[i] = b1 * m[i] + (1.0 - b1) * g;
                v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= self.lr * mhat / (vhat.sqrt() + ADAM_EPS);
            }
            k += p.len();
        }
    }
}

/// Result of a training run.
pub struct TrainResult {
    pub params: ParamSet,
    /// Per-iteration batch losses, indexed from the run's first iteration.
    pub losses: Vec<f64>,
    /// Global index of the first iteration of this run (nonzero on resume).
    pub start_iteration: u64,
}

fn optimizer_extra(adam: &Adam, next_iteration: u64) -> model::ExtraTensors {
    let mut extra: model::ExtraTensors = vec![
        ("opt.iteration".into(), vec![1], vec![next_iteration as f64]),
        ("opt.adam_t".into(), vec![1], vec![adam.t as f64]),
    ];
    adam.m.for_each_tensor(|name, data, shape| {
        extra.push((format!("opt.m.{name}"), shape.to_vec(), data.to_vec()));
    });
    adam.v.for_each_tensor(|name, data, shape| {
        extra.push((format!("opt.v.{name}"), shape.to_vec(), data.to_vec()));
    });
    extra
}

fn restore_optimizer(adam: &mut Adam, extra: &model::ExtraTensors, cfg: &ModelConfig) -> Result<u64> {
    let get = |name: &str| -> Option<&(String, Vec<usize>, Vec<f64>)> {
        extra.iter().find(|(n, _, _)| n == name)
    };
    let start = get("opt.iteration")
        .map(|(_, _, d)| d[0] as u64)
        .unwrap_or(0);
    adam.t = get("opt.adam_t").map(|(_, _, d)| d[0] as u64).unwrap_or(0);
    for (prefix, state) in [("opt.m.", &mut adam.m), ("opt.v.", &mut adam.v)] {
        let mut restored = ParamSet::zeros(cfg)?;
        {
            let mut slots = restored.tensors_mut();
            for (name, _, data) in extra {
                if let Some(base) = name.strip_prefix(prefix) {
                    if let Some(slot) = slots.iter_mut().find(|(n, _)| n == base) {
                        if slot.1.len() == data.len() {
                            slot.1.copy_from_slice(data);
                        }
                    }
                }
            }
        }
        *state = restored;
    }
    Ok(start)
}

/// Run minibatch training over a target-domain dataset. When `out_dir` is
/// given, writes `loss.csv` (iter, loss, wall_ms), periodic checkpoints, the
/// final `checkpoint.midf`, and a `run_manifest.txt` with the full config.
pub fn train(
    dataset: &[Image],
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    resume: Option<&Path>,
) -> Result<TrainResult> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Dataset("training dataset is empty".into()));
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }

    let mut params;
    let mut adam = Adam::new(cfg)?;
    let mut start_iteration = 0u64;
    match resume {
        Some(path) => {
            let ckpt = model::load_checkpoint(path, Some(&cfg.model))?;
            params = ckpt.params;
            start_iteration = restore_optimizer(&mut adam, &ckpt.extra, &cfg.model)?;
        }
        None => {
            params = model::init(&cfg.model, cfg.seed)?;
        }
    }

    if let Some(dir) = out_dir {
        fs::write(dir.join("run_manifest.txt"), manifest_text(cfg))?;
    }

    let mut losses = Vec::with_capacity(cfg.num_iterations);
    let mut log = String::from("iter,loss,wall_ms\n");
    for local in 0..cfg.num_iterations {
        let iteration = start_iteration + local as u64;
        let started = Instant::now();
        let batch = select_batch(dataset, cfg, iteration);
        let (loss, grads) = dsm_loss_and_grad(&params, &batch, iteration, cfg)?;
        adam.step(&mut params, &grads);
        losses.push(loss);
        let wall_ms = started.elapsed().as_millis();
        log.push_str(&format!("{iteration},{loss},{wall_ms}\n"));
        if let Some(dir) = out_dir {
            if cfg.checkpoint_every > 0 && (local + 1) % cfg.checkpoint_every == 0 {
                let extra = optimizer_extra(&adam, iteration + 1);
                model::save_checkpoint(
                    dir.join(format!("checkpoint_{:06}.midf", iteration + 1)),
                    &cfg.model,
                    &params,
                    &extra,
                )?;
            }
        }
    }

    if let Some(dir) = out_dir {
        fs::write(dir.join("loss.csv"), &log)?;
        let extra = optimizer_extra(&adam, start_iteration + cfg.num_iterations as u64);
        model::save_checkpoint(dir.join("checkpoint.midf"), &cfg.model, &params, &extra)?;
    }
    Ok(TrainResult {
        params,
        losses,
        start_iteration,
    })
}

fn select_batch(dataset: &[Image], cfg: &TrainConfig, iteration: u64) -> Vec<Image> {
    let mut rng = ChaCha12Rng::seed_from_u64(split_seed(cfg.seed, 0x6261_7463 ^ iteration));
    (0..cfg.batch_size)
        .map(|_| dataset[rng.gen_range(0..dataset.len())].clone())
        .collect()
}

fn manifest_text(cfg: &TrainConfig) -> String {
    format!(
        "seed={}\nbatch_size={}\nnum_iterations={}\nlearning_rate={}\n\
         adam_beta1={}\nadam_beta2={}\ncheckpoint_every={}\n\
         lmi.window_delta={}\nlmi.shift_steps_k={}\nlmi.bins={}\n\
         sde.sigma_min={}\nsde.sigma_max={}\nsde.num_steps={}\n\
         model.base_width={}\nmodel.depth={}\nmodel.time_embed_dim={}\nmodel.activation={}\n",
        cfg.seed,
        cfg.batch_size,
        cfg.num_iterations,
        cfg.learning_rate,
        cfg.adam_betas.0,
        cfg.adam_betas.1,
        cfg.checkpoint_every,
        cfg.lmi.window_delta,
        cfg.lmi.shift_steps_k,
        cfg.lmi.estimator.bins,
        cfg.schedule.sigma_min,
        cfg.schedule.sigma_max,
        cfg.schedule.num_steps,
        cfg.model.base_width,
        cfg.model.depth,
        cfg.model.time_embed_dim,
        cfg.model.activation.name(),
    )
}

/// Mean of `values[end + 1 - window ..= end]`.
pub fn moving_average(values: &[f64], window: usize, end: usize) -> f64 {
    let start = (end + 1).saturating_sub(window);
    let slice = &values[start..=end];
    slice.iter().sum::<f64>() / slice.len() as f64
}
