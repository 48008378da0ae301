//! Command-line front end: dataset generation, training, translation,
//! evaluation, and LMI map export.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage/config error. Every
//! command is deterministic given `--seed` and its configuration, and writes
//! a fully resolved config for exact replay.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::image::{load_image, save_image};
use crate::lmi::lmi_map;
use crate::metrics::evaluate_run;
use crate::model;
use crate::synth::{load_dir_images, split_seed, write_dataset};
use crate::train::train;
use crate::translate::{translate, translate_perturbation_baseline, TranslateMode};

#[derive(Parser)]
#[command(
    name = "midiffusion",
    version,
    about = "Zero-shot cross-modality image translation with LMI-guided diffusion"
)]
struct Cli {
    /// Cap the worker thread count; results are identical at any setting.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic paired-modality dataset.
    GenData {
        /// Config file overriding the default dataset spec.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the score model on target-domain images.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory of target-domain training images.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Resume from an earlier checkpoint, continuing iteration numbers.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Translate a guide image (or a directory of them).
    Translate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Guide image file or directory.
        #[arg(long)]
        guide: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `lmi` (guided) or `baseline` (perturbation).
        #[arg(long)]
        mode: Option<String>,
        /// Start-time fraction for the baseline; required with --mode baseline.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Keep every m-th intermediate frame.
        #[arg(long)]
        keep_every: Option<usize>,
    },
    /// Score translations against guides and targets, writing a CSV report.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        guide: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the LMI map between two images and export it.
    LmiMap {
        #[arg(long)]
        guide: PathBuf,
        #[arg(long)]
        probe: PathBuf,
        /// Output PGM path; raw and summary sidecars are written next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env()?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn cmd_gen_data(spec: Option<&Path>, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(spec, seed)?;
    let dataset = cfg.dataset_spec();
    write_dataset(&dataset, out)?;
    cfg.write_resolved(out)?;
    println!(
        "wrote {} training and {} test pairs to {}",
        dataset.train_count,
        dataset.test_count,
        out.display()
    );
    Ok(())
}

pub fn cmd_train(
    config: Option<&Path>,
    data: &Path,
    out: &Path,
    seed: Option<u64>,
    resume: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(config, seed)?;
    let images: Vec<_> = load_dir_images(data)?
        .into_iter()
        .map(|(_, img)| img)
        .collect();
    let tc = cfg.train_config();
    cfg.write_resolved(out)?;
    let result = train(&images, &tc, Some(out), resume)?;
    let last = result.losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained {} iterations on {} images; final loss {last:.4}; checkpoint at {}",
        tc.num_iterations,
        images.len(),
        out.join("checkpoint.midf").display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_translate(
    checkpoint: &Path,
    guide: &Path,
    out: &Path,
    mode: Option<&str>,
    t0: Option<f64>,
    config: Option<&Path>,
    seed: Option<u64>,
    keep_every: Option<usize>,
) -> Result<()> {
    let mut cfg = load_config(config, seed)?;
    if let Some(m) = mode {
        let parsed = TranslateMode::parse(m)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode {m:?}")))?;
        if parsed == TranslateMode::PerturbationBaseline && t0.is_none() {
            return Err(Error::InvalidConfig(
                "--mode baseline requires --t0".into(),
            ));
        }
        cfg.translate_mode = parsed;
    }
    if let Some(v) = t0 {
        cfg.t0 = v;
    }
    if let Some(k) = keep_every {
        cfg.keep_intermediates = k;
    }

    let ckpt = model::load_checkpoint(checkpoint, None)?;
    let guides: Vec<(String, crate::image::Image)> = if guide.is_dir() {
        load_dir_images(guide)?
    } else {
        let name = guide
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("guide.pgm")
            .to_string();
        vec![(name, load_image(guide)?)]
    };

    fs::create_dir_all(out)?;
    cfg.write_resolved(out)?;
    for (i, (name, g)) in guides.iter().enumerate() {
        let mut tcfg = cfg.translation_config();
        tcfg.seed = split_seed(cfg.seed, i as u64);
        let result = match tcfg.mode {
            TranslateMode::LmiGuided => translate(g, &ckpt.params, &ckpt.config, &tcfg)?,
            TranslateMode::PerturbationBaseline => {
                translate_perturbation_baseline(g, &ckpt.params, &ckpt.config, &tcfg)?
            }
        };
        let stem = name
            .trim_end_matches(".pgm")
            .trim_end_matches(".png")
            .to_string();
        save_image(&result.image, out.join(format!("{stem}.pgm")))?;
        result.write_records(out.join(format!("{stem}.jsonl")))?;
        for (step, frame) in &result.intermediates {
            let vis = crate::image::min_max_scale(frame);
            save_image(&vis, out.join(format!("{stem}_step{step:05}.pgm")))?;
        }
    }
    println!(
        "translated {} image(s) in {} mode to {}",
        guides.len(),
        cfg.translate_mode.name(),
        out.display()
    );
    Ok(())
}

pub fn cmd_eval(pred: &Path, guide: &Path, target: &Path, out_csv: &Path) -> Result<()> {
    let p = load_dir_images(pred)?;
    let g = load_dir_images(guide)?;
    let t = load_dir_images(target)?;
    let report = evaluate_run(&p, &g, &t)?;
    if let Some(parent) = out_csv.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out_csv, report.to_csv())?;
    println!(
        "evaluated {} pairs; mean ssim_tar {:.4}, ssim_src {:.4}, mse {:.2}, psnr {:.2}, mi {:.4}",
        report.rows.len(),
        report.mean.ssim_tar,
        report.mean.ssim_src,
        report.mean.mse,
        report.mean.psnr,
        report.mean.mi
    );
    Ok(())
}

pub fn cmd_lmi_map(guide: &Path, probe: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let cfg = load_config(config, None)?;
    let g = load_image(guide)?;
    let p = load_image(probe)?;
    let map = lmi_map(&g, &p, &cfg.lmi)?;
    map.write_pgm(out)?;
    map.write_raw(out.with_extension("lmi"))?;

    // Argmax-shift sidecar.
    let mut shifts = String::from("y,x,dy,dx\n");
    for ((y, x), (dy, dx)) in map.argmax_shift.indexed_iter() {
        shifts.push_str(&format!("{y},{x},{dy},{dx}\n"));
    }
    fs::write(out.with_extension("shifts.csv"), shifts)?;

    let min = map.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = map.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = map.values.mean().unwrap_or(0.0);
    let footer = serde_json::json!({ "min": min, "max": max, "mean": mean });
    fs::write(out.with_extension("json"), footer.to_string())?;
    println!("lmi map stats: {footer}");
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::CheckpointMismatch(_) | Error::Dataset(_) => 2,
        _ => 1,
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData { spec, out, seed } => cmd_gen_data(spec.as_deref(), &out, seed),
        Command::Train {
            config,
            data,
            out,
            seed,
            resume,
        } => cmd_train(config.as_deref(), &data, &out, seed, resume.as_deref()),
        Command::Translate {
            checkpoint,
            guide,
            out,
            mode,
            t0,
            config,
            seed,
            keep_every,
        } => cmd_translate(
            &checkpoint,
            &guide,
            &out,
            mode.as_deref(),
            t0,
            config.as_deref(),
            seed,
            keep_every,
        ),
        Command::Eval {
            pred,
            guide,
            target,
            out,
        } => cmd_eval(&pred, &guide, &target, &out),
        Command::LmiMap {
            guide,
            probe,
            out,
            config,
        } => cmd_lmi_map(&guide, &probe, &out, config.as_deref()),
    }
}

/// Entry point for the `midiffusion` binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        // Build the global pool once; per the concurrency contract the
        // results are identical at any worker count.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
