//! Flat key=value run configuration shared by every command.
//!
//! Unknown keys are rejected; parse -> render -> parse is idempotent; every
//! run writes its fully resolved configuration next to its outputs.
//! Environment variables override file values under the `MIDIFFUSION_`
//! prefix with dots mapped to underscores (e.g. `MIDIFFUSION_TRAIN_BATCH_SIZE`).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lmi::{EstimatorConfig, EstimatorKind, LmiConfig};
use crate::model::ops::Activation;
use crate::model::ModelConfig;
use crate::sde::NoiseSchedule;
use crate::synth::{AppearanceMap, DatasetSpec, ModalityPairSpec, Structure};
use crate::train::TrainConfig;
use crate::translate::{TranslateMode, TranslationConfig};

pub const ENV_PREFIX: &str = "MIDIFFUSION_";

/// The full resolved configuration. Each command consumes the sections it
/// needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DatasetSpec,
    pub lmi: LmiConfig,
    pub schedule: NoiseSchedule,
    pub model: ModelConfig,
    pub batch_size: usize,
    pub num_iterations: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub checkpoint_every: usize,
    pub translate_mode: TranslateMode,
    pub t0: f64,
    pub keep_intermediates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            seed: 0,
            data: DatasetSpec::default(),
            lmi: LmiConfig::default(),
            schedule: NoiseSchedule::default(),
            model: ModelConfig::default(),
            batch_size: t.batch_size,
            num_iterations: t.num_iterations,
            learning_rate: t.learning_rate,
            adam_beta1: t.adam_betas.0,
            adam_beta2: t.adam_betas.1,
            checkpoint_every: t.checkpoint_every,
            translate_mode: TranslateMode::LmiGuided,
            t0: 0.5,
            keep_intermediates: 0,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidConfig(format!("invalid value {value:?} for config key {key}"))
}

impl RunConfig {
    /// Apply one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        macro_rules! num {
            () => {
                v.parse().map_err(|_| bad(key, v))?
            };
        }
        match key {
            "seed" => self.seed = num!(),
            "data.structure" => {
                self.data.pair.structure = Structure::parse(v).ok_or_else(|| bad(key, v))?
            }
            "data.size" => self.data.pair.size = num!(),
            "data.appearance_f" => {
                self.data.pair.appearance_f = AppearanceMap::parse(v).ok_or_else(|| bad(key, v))?
            }
            "data.appearance_g" => {
                self.data.pair.appearance_g = AppearanceMap::parse(v).ok_or_else(|| bad(key, v))?
            }
            "data.noise_f" => self.data.pair.texture_noise_f = num!(),
            "data.noise_g" => self.data.pair.texture_noise_g = num!(),
            "data.train_count" => self.data.train_count = num!(),
            "data.test_count" => self.data.test_count = num!(),
            "lmi.window_delta" => self.lmi.window_delta = num!(),
            "lmi.shift_steps_k" => self.lmi.shift_steps_k = num!(),
            "lmi.tiling_extent_k" => self.lmi.tiling_extent_k = num!(),
            "lmi.degenerate_value" => self.lmi.degenerate_value = num!(),
            "lmi.estimator" => {
                self.lmi.estimator.kind = match v {
                    "histogram" => EstimatorKind::Histogram,
                    "gaussian_kernel" => EstimatorKind::GaussianKernel,
                    _ => return Err(bad(key, v)),
                }
            }
            "lmi.bins" => self.lmi.estimator.bins = num!(),
            "lmi.bandwidth" => self.lmi.estimator.bandwidth = num!(),
            "lmi.value_lo" => self.lmi.estimator.value_range.0 = num!(),
            "lmi.value_hi" => self.lmi.estimator.value_range.1 = num!(),
            "sde.sigma_min" => self.schedule.sigma_min = num!(),
            "sde.sigma_max" => self.schedule.sigma_max = num!(),
            "sde.num_steps" => self.schedule.num_steps = num!(),
            "model.base_width" => self.model.base_width = num!(),
            "model.depth" => self.model.depth = num!(),
            "model.time_embed_dim" => self.model.time_embed_dim = num!(),
            "model.activation" => {
                self.model.activation = Activation::parse(v).ok_or_else(|| bad(key, v))?
            }
            "train.batch_size" => self.batch_size = num!(),
            "train.num_iterations" => self.num_iterations = num!(),
            "train.learning_rate" => self.learning_rate = num!(),
            "train.adam_beta1" => self.adam_beta1 = num!(),
            "train.adam_beta2" => self.adam_beta2 = num!(),
            "train.checkpoint_every" => self.checkpoint_every = num!(),
            "translate.mode" => {
                self.translate_mode = TranslateMode::parse(v).ok_or_else(|| bad(key, v))?
            }
            "translate.t0" => self.t0 = num!(),
            "translate.keep_intermediates" => self.keep_intermediates = num!(),
            _ => {
                return Err(Error::InvalidConfig(format!("unknown config key: {key}")));
            }
        }
        Ok(())
    }

    /// Render every key in a fixed order with canonical formatting.
    pub fn render(&self) -> String {
        let est = match self.lmi.estimator.kind {
            EstimatorKind::Histogram => "histogram",
            EstimatorKind::GaussianKernel => "gaussian_kernel",
        };
        format!(
            "seed={}\n\
             data.structure={}\n\
             data.size={}\n\
             data.appearance_f={}\n\
             data.appearance_g={}\n\
             data.noise_f={}\n\
             data.noise_g={}\n\
             data.train_count={}\n\
             data.test_count={}\n\
             lmi.window_delta={}\n\
             lmi.shift_steps_k={}\n\
             lmi.tiling_extent_k={}\n\
             lmi.degenerate_value={}\n\
             lmi.estimator={}\n\
             lmi.bins={}\n\
             lmi.bandwidth={}\n\
             lmi.value_lo={}\n\
             lmi.value_hi={}\n\
             sde.sigma_min={}\n\
             sde.sigma_max={}\n\
             sde.num_steps={}\n\
             model.base_width={}\n\
             model.depth={}\n\
             model.time_embed_dim={}\n\
             model.activation={}\n\
             train.batch_size={}\n\
             train.num_iterations={}\n\
             train.learning_rate={}\n\
             train.adam_beta1={}\n\
             train.adam_beta2={}\n\
             train.checkpoint_every={}\n\
             translate.mode={}\n\
             translate.t0={}\n\
             translate.keep_intermediates={}\n",
            self.seed,
            self.data.pair.structure.name(),
            self.data.pair.size,
            self.data.pair.appearance_f.render(),
            self.data.pair.appearance_g.render(),
            self.data.pair.texture_noise_f,
            self.data.pair.texture_noise_g,
            self.data.train_count,
            self.data.test_count,
            self.lmi.window_delta,
            self.lmi.shift_steps_k,
            self.lmi.tiling_extent_k,
            self.lmi.degenerate_value,
            est,
            self.lmi.estimator.bins,
            self.lmi.estimator.bandwidth,
            self.lmi.estimator.value_range.0,
            self.lmi.estimator.value_range.1,
            self.schedule.sigma_min,
            self.schedule.sigma_max,
            self.schedule.num_steps,
            self.model.base_width,
            self.model.depth,
            self.model.time_embed_dim,
            self.model.activation.name(),
            self.batch_size,
            self.num_iterations,
            self.learning_rate,
            self.adam_beta1,
            self.adam_beta2,
            self.checkpoint_every,
            self.translate_mode.name(),
            self.t0,
            self.keep_intermediates,
        )
    }

    /// Parse overrides on top of the defaults. Lines are `key = value`;
    /// blank lines and `#` comments are skipped; unknown keys are rejected.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", lineno + 1))
            })?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Apply `MIDIFFUSION_*` environment overrides.
    pub fn apply_env(&mut self) -> Result<()> {
        let keys: Vec<String> = self
            .render()
            .lines()
            .filter_map(|l| l.split_once('=').map(|(k, _)| k.to_string()))
            .collect();
        for key in keys {
            let env_key = format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"));
            if let Ok(v) = std::env::var(&env_key) {
                self.set(&key, &v)?;
            }
        }
        Ok(())
    }

    /// Write the fully resolved configuration next to a run's outputs.
    pub fn write_resolved(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)?;
        fs::write(out_dir.join("resolved.cfg"), self.render())?;
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            num_iterations: self.num_iterations,
            learning_rate: self.learning_rate,
            adam_betas: (self.adam_beta1, self.adam_beta2),
            seed: self.seed,
            lmi: self.lmi.clone(),
            schedule: self.schedule.clone(),
            model: self.model.clone(),
            checkpoint_every: self.checkpoint_every,
        }
    }

    pub fn translation_config(&self) -> TranslationConfig {
        TranslationConfig {
            lmi: self.lmi.clone(),
            schedule: self.schedule.clone(),
            seed: self.seed,
            keep_intermediates: self.keep_intermediates,
            mode: self.translate_mode,
            t0: self.t0,
        }
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        let mut data = self.data.clone();
        data.pair = ModalityPairSpec {
            seed: self.seed,
            ..data.pair
        };
        data
    }

    pub fn estimator(&self) -> EstimatorConfig {
        self.lmi.estimator.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_render_parse_is_idempotent() {
        let cfg = RunConfig::default();
        let text = cfg.render();
        let parsed = RunConfig::parse_str(&text).unwrap();
        assert_eq!(parsed, cfg);
        assert_eq!(parsed.render(), text);
    }

    #[test]
    fn overrides_round_trip() {
        let text = "seed=7\nmodel.base_width=16\ndata.appearance_f=gamma:2.5\n\
                    translate.mode=baseline\ntranslate.t0=0.3\nlmi.estimator=gaussian_kernel\n";
        let cfg = RunConfig::parse_str(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.model.base_width, 16);
        assert_eq!(cfg.data.pair.appearance_f, AppearanceMap::Gamma(2.5));
        assert_eq!(cfg.translate_mode, TranslateMode::PerturbationBaseline);
        assert_eq!(cfg.t0, 0.3);
        let round = RunConfig::parse_str(&cfg.render()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let err = RunConfig::parse_str("nosuch.key=1\n").unwrap_err();
        assert!(err.to_string().contains("nosuch.key"), "{err}");
    }

    #[test]
    fn bad_value_rejected() {
        assert!(RunConfig::parse_str("seed=abc\n").is_err());
        assert!(RunConfig::parse_str("model.activation=unknown\n").is_err());
        assert!(RunConfig::parse_str("just a line\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let cfg = RunConfig::parse_str("# comment\n\nseed=3\n").unwrap();
        assert_eq!(cfg.seed, 3);
    }

    #[test]
    fn env_override_applies() {
        let key = format!("{ENV_PREFIX}TRAIN_BATCH_SIZE");
        std::env::set_var(&key, "3");
        let mut cfg = RunConfig::default();
        cfg.apply_env().unwrap();
        std::env::remove_var(&key);
        assert_eq!(cfg.batch_size, 3);
    }
}
