//! Zero-shot translation: run the reverse SDE from pure noise while
//! conditioning each step on the LMI map between the guide image and the
//! current sample. The perturbation baseline instead noises the guide to an
//! intermediate time and denoises it unconditionally (LMI channel zeroed),
//! reusing the same trained network.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::lmi::{lmi_map, LmiConfig};
use crate::model::{self, ModelConfig, ParamSet};
use crate::sde::{reverse_step, NoiseSchedule, SolverState, TOTAL_TIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslateMode {
    LmiGuided,
    PerturbationBaseline,
}

impl TranslateMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lmi" | "lmi_guided" => Some(Self::LmiGuided),
            "baseline" | "perturbation_baseline" => Some(Self::PerturbationBaseline),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LmiGuided => "lmi",
            Self::PerturbationBaseline => "baseline",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TranslationConfig {
    pub lmi: LmiConfig,
    pub schedule: NoiseSchedule,
    pub seed: u64,
    /// Keep every m-th intermediate state; 0 keeps none.
    pub keep_intermediates: usize,
    pub mode: TranslateMode,
    /// Start time fraction for the perturbation baseline, in (0, 1].
    pub t0: f64,
}

impl Default for TranslationConfig {
    fn default() -> Self {
        Self {
            lmi: LmiConfig::default(),
            schedule: NoiseSchedule::default(),
            seed: 0,
            keep_intermediates: 0,
            mode: TranslateMode::LmiGuided,
            t0: 0.5,
        }
    }
}

impl TranslationConfig {
    pub fn validate(&self) -> Result<()> {
        self.lmi.validate()?;
        self.schedule.validate()?;
        if self.mode == TranslateMode::PerturbationBaseline && !(self.t0 > 0.0 && self.t0 <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "t0 must be in (0, 1], got {}",
                self.t0
            )));
        }
        Ok(())
    }
}

/// Per-step diagnostics, exported as JSON lines.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub sigma: f64,
    pub mean_lmi: f64,
}

#[derive(Debug, Clone)]
pub struct TranslationOutput {
    /// Final sample, clamped to [0, 1] at output time only.
    pub image: Image,
    pub intermediates: Vec<(usize, Image)>,
    pub records: Vec<StepRecord>,
}

impl TranslationOutput {
    /// Write the per-step records as JSON lines.
    pub fn write_records<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("serializable record"));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

fn run_chain(
    params: &ParamSet,
    model_cfg: &ModelConfig,
    guide: &Image,
    cfg: &TranslationConfig,
    mut state: SolverState,
    first_step: usize,
    use_lmi: bool,
) -> Result<TranslationOutput> {
    let zero_lmi = Array2::zeros(guide.dim());
    let mut intermediates = Vec::new();
    let mut records = Vec::with_capacity(cfg.schedule.num_steps - first_step);
    for n in first_step..cfg.schedule.num_steps {
        if cfg.keep_intermediates > 0 && (n - first_step) % cfg.keep_intermediates == 0 {
            intermediates.push((n, state.x.clone()));
        }
        let t = cfg.schedule.time_of_step(n);
        let sigma = cfg.schedule.sigma(t)?;
        let (lmi_values, mean_lmi) = if use_lmi {
            let map = lmi_map(guide, &state.x, &cfg.lmi)?;
            let mean = map.values.mean().unwrap_or(0.0);
            (map.values, mean)
        } else {
            (zero_lmi.clone(), 0.0)
        };
        let raw = model::forward(params, model_cfg, &state.x, &lmi_values, sigma)?;
        // Undo the sigma-scaled output parameterization.
        let score = raw.mapv(|v| v / sigma);
        records.push(StepRecord {
            step: n,
            sigma,
            mean_lmi,
        });
        reverse_step(&mut state, &score, &cfg.schedule)?;
    }
    Ok(TranslationOutput {
        image: state.x.mapv(|v| v.clamp(0.0, 1.0)),
        intermediates,
        records,
    })
}

/// LMI-guided zero-shot translation: start from pure noise at t = T and
/// condition every reverse step on the LMI map between the guide and the
/// current state. No start-time hyperparameter is involved.
pub fn translate(
    guide: &Image,
    params: &ParamSet,
    model_cfg: &ModelConfig,
    cfg: &TranslationConfig,
) -> Result<TranslationOutput> {
    cfg.validate()?;
    model_cfg.check_spatial(guide.dim())?;
    let state = SolverState::from_noise(guide.dim(), &cfg.schedule, cfg.seed);
    run_chain(params, model_cfg, guide, cfg, state, 0, true)
}

/// Noise-and-denoise baseline: perturb the guide to time t0 * T and run the
/// remaining reverse steps with a zeroed LMI channel (unconditional use of
/// the same network).
pub fn translate_perturbation_baseline(
    guide: &Image,
    params: &ParamSet,
    model_cfg: &ModelConfig,
    cfg: &TranslationConfig,
) -> Result<TranslationOutput> {
    if !(cfg.t0 > 0.0 && cfg.t0 <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "t0 must be in (0, 1], got {}",
            cfg.t0
        )));
    }
    cfg.lmi.validate()?;
    cfg.schedule.validate()?;
    model_cfg.check_spatial(guide.dim())?;
    let n_steps = cfg.schedule.num_steps;
    // First step whose time lies within [0, t0 * T].
    let first_step = ((1.0 - cfg.t0) * n_steps as f64).ceil() as usize;
    let t_start = cfg.t0 * TOTAL_TIME;
    let mut state = SolverState::from_image(guide.clone(), first_step, cfg.seed);
    let noise = crate::sde::standard_normal_field(guide.dim(), &mut state.rng);
    let sigma0 = cfg.schedule.sigma(t_start)?;
    state.x = guide + &(noise * sigma0);
    run_chain(params, model_cfg, guide, cfg, state, first_step, false)
}
