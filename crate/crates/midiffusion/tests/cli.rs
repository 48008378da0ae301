//! End-to-end tests of the command-line interface, driving the built binary
//! through the full pipeline on small configurations.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_midiffusion"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn count_files(dir: &Path) -> usize {
    fs::read_dir(dir).map(|d| d.count()).unwrap_or(0)
}

fn write_small_config(path: &Path) {
    fs::write(
        path,
        "data.train_count=4\n\
         data.test_count=2\n\
         model.base_width=8\n\
         model.depth=1\n\
         model.time_embed_dim=4\n\
         train.batch_size=2\n\
         train.num_iterations=12\n\
         train.checkpoint_every=6\n\
         sde.num_steps=6\n\
         seed=5\n",
    )
    .unwrap();
}

#[test]
fn gen_data_default_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("d1");
    let status = run(&["gen-data", "--out", out1.to_str().unwrap()]);
    assert_code(&status, 0);
    assert_eq!(count_files(&out1.join("train_F")), 256);
    assert_eq!(count_files(&out1.join("test_G")), 64);
    assert_eq!(count_files(&out1.join("test_F")), 64);
    assert!(out1.join("manifest.csv").exists());
    assert!(out1.join("resolved.cfg").exists());

    // Same seed, second run: identical bytes.
    let out2 = dir.path().join("d2");
    assert_code(&run(&["gen-data", "--out", out2.to_str().unwrap()]), 0);
    let a = fs::read(out1.join("train_F/0000.pgm")).unwrap();
    let b = fs::read(out2.join("train_F/0000.pgm")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(out1.join("manifest.csv")).unwrap(),
        fs::read(out2.join("manifest.csv")).unwrap()
    );
}

#[test]
fn gen_data_missing_out_is_usage_error() {
    let out = run(&["gen-data"]);
    assert_code(&out, 2);
}

#[test]
fn invalid_config_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "no.such.key=1\n").unwrap();
    let out = run(&[
        "gen-data",
        "--spec",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("d").to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no.such.key"), "{stderr}");
}

#[test]
fn full_pipeline_train_translate_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write_small_config(&cfg);
    let data = dir.path().join("data");
    assert_code(
        &run(&[
            "gen-data",
            "--spec",
            cfg.to_str().unwrap(),
            "--out",
            data.to_str().unwrap(),
        ]),
        0,
    );

    // Smoke training run writes a checkpoint and loss log.
    let train_out = dir.path().join("train");
    assert_code(
        &run(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--data",
            data.join("train_F").to_str().unwrap(),
            "--out",
            train_out.to_str().unwrap(),
        ]),
        0,
    );
    let ckpt = train_out.join("checkpoint.midf");
    assert!(ckpt.exists());
    assert!(train_out.join("loss.csv").exists());
    assert!(train_out.join("run_manifest.txt").exists());
    // Periodic checkpoints at the configured cadence.
    assert!(train_out.join("checkpoint_000006.midf").exists());

    // Resume continues iteration numbering.
    let resume_out = dir.path().join("resume");
    assert_code(
        &run(&[
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--data",
            data.join("train_F").to_str().unwrap(),
            "--out",
            resume_out.to_str().unwrap(),
            "--resume",
            ckpt.to_str().unwrap(),
        ]),
        0,
    );
    let log = fs::read_to_string(resume_out.join("loss.csv")).unwrap();
    assert!(
        log.lines().nth(1).unwrap().starts_with("12,"),
        "resumed log should start at iteration 12: {log}"
    );

    // Translate a whole directory: one output per input, same shape.
    let trans_out = dir.path().join("trans");
    assert_code(
        &run(&[
            "translate",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--guide",
            data.join("test_G").to_str().unwrap(),
            "--out",
            trans_out.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
        ]),
        0,
    );
    let preds: Vec<_> = fs::read_dir(&trans_out)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".pgm"))
        .collect();
    assert_eq!(preds.len(), 2);
    let img = midiffusion::image::load_image(trans_out.join("0000.pgm")).unwrap();
    assert_eq!(img.dim(), (32, 32));
    assert!(trans_out.join("0000.jsonl").exists());
    assert!(trans_out.join("resolved.cfg").exists());

    // Evaluate predictions; pred = target gives ssim_tar = 1 rows.
    let csv_path = dir.path().join("eval.csv");
    assert_code(
        &run(&[
            "eval",
            "--pred",
            data.join("test_F").to_str().unwrap(),
            "--guide",
            data.join("test_G").to_str().unwrap(),
            "--target",
            data.join("test_F").to_str().unwrap(),
            "--out",
            csv_path.to_str().unwrap(),
        ]),
        0,
    );
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("pair_id,ssim_tar,ssim_src,mse,psnr,mi\n"));
    for line in csv.lines().skip(1).take(2) {
        let ssim_tar: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(ssim_tar, 1.0);
    }

    // Mismatched counts: one prediction vs two targets.
    let single = dir.path().join("single");
    fs::create_dir_all(&single).unwrap();
    fs::copy(data.join("test_F/0000.pgm"), single.join("0000.pgm")).unwrap();
    let out = run(&[
        "eval",
        "--pred",
        single.to_str().unwrap(),
        "--guide",
        data.join("test_G").to_str().unwrap(),
        "--target",
        data.join("test_F").to_str().unwrap(),
        "--out",
        dir.path().join("bad.csv").to_str().unwrap(),
    ]);
    assert_code(&out, 2);
}

#[test]
fn translate_baseline_requires_t0() {
    let dir = tempfile::tempdir().unwrap();
    // The flag validation fires before any file is touched.
    let out = run(&[
        "translate",
        "--checkpoint",
        dir.path().join("none.midf").to_str().unwrap(),
        "--guide",
        dir.path().join("g.pgm").to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "--mode",
        "baseline",
    ]);
    assert_code(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--t0"), "{stderr}");
}

#[test]
fn lmi_map_self_match_and_footer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write_small_config(&cfg);
    let data = dir.path().join("data");
    assert_code(
        &run(&[
            "gen-data",
            "--spec",
            cfg.to_str().unwrap(),
            "--out",
            data.to_str().unwrap(),
        ]),
        0,
    );
    let guide = data.join("test_G/0000.pgm");
    let out_pgm = dir.path().join("map.pgm");
    assert_code(
        &run(&[
            "lmi-map",
            "--guide",
            guide.to_str().unwrap(),
            "--probe",
            guide.to_str().unwrap(),
            "--out",
            out_pgm.to_str().unwrap(),
        ]),
        0,
    );
    assert!(out_pgm.exists());
    assert!(dir.path().join("map.lmi").exists());
    // Self-match: every argmax shift in the sidecar is zero.
    let shifts = fs::read_to_string(dir.path().join("map.shifts.csv")).unwrap();
    for line in shifts.lines().skip(1) {
        let mut cols = line.split(',').skip(2);
        assert_eq!(cols.next(), Some("0"));
        assert_eq!(cols.next(), Some("0"));
    }
    // Footer JSON carries the summary stats.
    let footer: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("map.json")).unwrap()).unwrap();
    assert!(footer["min"].is_number());
    assert!(footer["max"].is_number());
    assert!(footer["mean"].is_number());

    // Constant guide: the map is identically zero.
    let flat = dir.path().join("flat.pgm");
    let img = ndarray::Array2::from_elem((32, 32), 0.5);
    midiffusion::image::save_image(&img, &flat).unwrap();
    let out_flat = dir.path().join("flat_map.pgm");
    assert_code(
        &run(&[
            "lmi-map",
            "--guide",
            flat.to_str().unwrap(),
            "--probe",
            guide.to_str().unwrap(),
            "--out",
            out_flat.to_str().unwrap(),
        ]),
        0,
    );
    let footer: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("flat_map.json")).unwrap())
            .unwrap();
    assert_eq!(footer["max"].as_f64().unwrap(), 0.0);
    assert_eq!(footer["min"].as_f64().unwrap(), 0.0);
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write_small_config(&cfg);
    let out1 = dir.path().join("t1");
    let out2 = dir.path().join("t2");
    assert_code(
        &bin()
            .args(["gen-data", "--spec", cfg.to_str().unwrap()])
            .args(["--out", out1.to_str().unwrap(), "--threads", "1"])
            .output()
            .unwrap(),
        0,
    );
    assert_code(
        &bin()
            .args(["gen-data", "--spec", cfg.to_str().unwrap()])
            .args(["--out", out2.to_str().unwrap(), "--threads", "2"])
            .output()
            .unwrap(),
        0,
    );
    assert_eq!(
        fs::read(out1.join("train_F/0000.pgm")).unwrap(),
        fs::read(out2.join("train_F/0000.pgm")).unwrap()
    );
}
