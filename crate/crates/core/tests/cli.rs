mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use laneguard::autoencoder::Variant;
use laneguard::experiment::{benchmark_episodes, ExperimentConfig, CONFIG_FILE, LOGS_DIR, METRICS_FILE};

fn laneguard(args: &[&str], out: &Path, config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_laneguard"));
    cmd.args(args).arg("--out").arg(out).arg("--quiet");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn write_tiny_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg = ExperimentConfig::default();
    let n = cfg.camera.shape.len();
    cfg.corpus.frames_per_track = 40;
    cfg.corpus.calibration_frames_per_track = 90;
    cfg.corpus.calibration_sequence_frames = 45;
    cfg.model.variant = Variant::Simple;
    cfg.model.layer_dims = Some(vec![n, 8, n]);
    cfg.train.epochs = 2;
    cfg.simulation.episodes = benchmark_episodes(1, 1000);
    let path = dir.join("tiny.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

#[test]
fn every_stage_runs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_tiny_config(dir.path());
    let out = dir.path().join("run");
    for stage in ["generate", "train", "calibrate", "simulate", "evaluate", "report"] {
        let o = laneguard(&[stage], &out, Some(&config));
        assert_eq!(o.status.code(), Some(0), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "--quiet printed output for {stage}");
    }
    assert!(out.join(CONFIG_FILE).exists());
    assert_eq!(fs::read_dir(out.join(LOGS_DIR)).unwrap().count(), 2);
    assert!(out.join(METRICS_FILE).exists());

    let first = fs::read(out.join(METRICS_FILE)).unwrap();
    let o = laneguard(&["evaluate", out.join(LOGS_DIR).to_str().unwrap()], &out, Some(&config));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(out.join(METRICS_FILE)).unwrap(), first);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_laneguard"))
        .args(["config", "--seed", "42"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let cfg = ExperimentConfig::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, 42);
    assert!(!dir.path().join(CONFIG_FILE).exists());
}

#[test]
fn missing_inputs_exit_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = laneguard(&["train"], dir.path(), None);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"model": {"variant": "recurrent"}}"#).unwrap();
    let o = laneguard(&["generate"], &dir.path().join("run"), Some(&config));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn counts_table_is_evaluated() {
    let dir = tempfile::tempdir().unwrap();
    let csv = common::data_path("published_counts.csv");
    let o = laneguard(&["evaluate", "--counts", csv.to_str().unwrap()], dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let metrics = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(metrics.lines().count(), common::published_rows().len() + 1);
}
