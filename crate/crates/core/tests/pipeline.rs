mod common;

use std::fs;
use std::path::Path;

use laneguard::autoencoder::{load_model, Variant};
use laneguard::calibration::{BandMode, FIXED_BAND1, FIXED_BAND2, FIXED_THETA};
use laneguard::evalkit::Unit;
use laneguard::experiment::{
    self, benchmark_episodes, CalibrationScore, ExperimentConfig, Split, CALIBRATION_FILE, CORPUS_DIR, LOGS_DIR,
    LOSS_FILE, MANIFEST_FILE, METRICS_FILE, MODEL_FILE, PLOTS_DIR, SUMMARY_FILE,
};
use laneguard::Error;

/// A configuration small enough to run every stage in seconds.
fn tiny() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    let n = cfg.camera.shape.len();
    cfg.corpus.frames_per_track = 60;
    cfg.corpus.calibration_frames_per_track = 90;
    cfg.corpus.calibration_sequence_frames = 45;
    cfg.model.variant = Variant::Simple;
    cfg.model.layer_dims = Some(vec![n, 16, n]);
    cfg.train.epochs = 3;
    cfg.simulation.episodes = benchmark_episodes(2, 1000);
    cfg
}

fn through_calibration(cfg: &ExperimentConfig, out: &Path) {
    experiment::generate(cfg, out).unwrap();
    experiment::train_command(cfg, out).unwrap();
    experiment::calibrate_command(cfg, out).unwrap();
}

#[test]
fn default_corpus_holds_a_thousand_frames_per_track() {
    let cfg = ExperimentConfig::default();
    let train = experiment::nominal_corpus(&cfg, Split::Train).unwrap();
    assert_eq!(train.len(), 3);
    assert_eq!(train.iter().map(|s| s.frames.len()).sum::<usize>(), 3000);
}

#[test]
fn generate_is_reproducible() {
    let cfg = tiny();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = experiment::generate(&cfg, a.path()).unwrap();
    experiment::generate(&cfg, b.path()).unwrap();
    assert_eq!(ma.total_train, 180);
    assert_eq!(ma.total_calibration, 270);
    let manifest = |d: &Path| fs::read(d.join(CORPUS_DIR).join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest(a.path()), manifest(b.path()));

    let loaded = experiment::load_corpus(a.path(), Split::Train).unwrap();
    let fresh = experiment::nominal_corpus(&cfg, Split::Train).unwrap();
    assert_eq!(loaded.len(), fresh.len());
    for (l, f) in loaded.iter().zip(&fresh) {
        assert_eq!(l.frames.len(), f.frames.len());
        for (x, y) in l.frames.iter().zip(&f.frames) {
            // PGM stores 8-bit pixels
            let diff = x.pixels().iter().zip(y.pixels()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(diff <= 0.5 / 255.0 + 1e-12);
        }
    }
}

#[test]
fn stages_without_inputs_report_missing_data() {
    let cfg = tiny();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(experiment::train_command(&cfg, dir.path()), Err(Error::Data(_))));
    assert!(matches!(experiment::calibrate_command(&cfg, dir.path()), Err(Error::Data(_))));
    assert!(matches!(experiment::simulate_command(&cfg, dir.path()), Err(Error::Data(_))));
    assert!(matches!(experiment::evaluate(dir.path(), Unit::Frame), Err(Error::Data(_))));
}

#[test]
fn training_is_reproducible_on_disk() {
    let cfg = tiny();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        experiment::generate(&cfg, d.path()).unwrap();
        experiment::train_command(&cfg, d.path()).unwrap();
    }
    let weights = |d: &Path| fs::read(d.join(MODEL_FILE)).unwrap();
    assert_eq!(weights(a.path()), weights(b.path()));
    let model = load_model(a.path().join(MODEL_FILE)).unwrap();
    assert_eq!(model.layer_dims(), cfg.layer_dims().as_slice());
    let loss = fs::read_to_string(a.path().join(LOSS_FILE)).unwrap();
    let mut lines = loss.lines();
    assert_eq!(lines.next(), Some("epoch,loss"));
    assert_eq!(lines.count(), cfg.train.epochs);
}

#[test]
fn calibration_modes() {
    let mut cfg = tiny();
    let dir = tempfile::tempdir().unwrap();
    through_calibration(&cfg, dir.path());
    let calibrated = experiment::load_calibration(dir.path()).unwrap();
    let t = calibrated.thresholds;
    assert!(t.theta > 0.0 && t.theta < t.band1 && t.band1 < t.band2);

    cfg.calibration.mode = BandMode::Fixed;
    let fixed = experiment::calibrate_command(&cfg, dir.path()).unwrap();
    assert_eq!(fixed.thresholds.theta, FIXED_THETA);
    assert_eq!(fixed.thresholds.band1, FIXED_BAND1);
    assert_eq!(fixed.thresholds.band2, FIXED_BAND2);
    assert_eq!(experiment::load_calibration(dir.path()).unwrap().thresholds, fixed.thresholds);
}

#[test]
fn too_few_calibration_frames_is_a_calibration_error() {
    let mut cfg = tiny();
    cfg.corpus.calibration_frames_per_track = 3;
    cfg.calibration.score = CalibrationScore::Raw;
    let dir = tempfile::tempdir().unwrap();
    experiment::generate(&cfg, dir.path()).unwrap();
    experiment::train_command(&cfg, dir.path()).unwrap();
    assert!(matches!(
        experiment::calibrate_command(&cfg, dir.path()),
        Err(Error::Calibration(_))
    ));
}

#[test]
fn simulate_evaluate_report() {
    let cfg = tiny();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    through_calibration(&cfg, out);

    let paths = experiment::simulate_command(&cfg, out).unwrap();
    assert_eq!(paths.len(), 4);
    for spec in &cfg.simulation.episodes {
        for guards in [false, true] {
            assert!(out.join(LOGS_DIR).join(experiment::log_name(spec, guards)).exists());
        }
    }
    let first: Vec<Vec<u8>> = paths.iter().map(|p| fs::read(p).unwrap()).collect();
    let again = experiment::simulate_command(&cfg, out).unwrap();
    assert_eq!(again, paths);
    for (p, bytes) in paths.iter().zip(&first) {
        assert_eq!(&fs::read(p).unwrap(), bytes, "{}", p.display());
    }

    let ev = experiment::evaluate(out, Unit::Frame).unwrap();
    assert_eq!(ev.episodes.len(), 4);
    assert!(ev.rows.iter().any(|r| r.label == "pooled_guards_off"));
    assert!(ev.rows.iter().any(|r| r.label == "pooled_guards_on"));
    let prevalence = ev.prevalence.unwrap();
    assert!(prevalence > 0.0 && prevalence < 1.0);
    assert!(ev.auc_prc.is_some());
    let metrics = fs::read_to_string(out.join(METRICS_FILE)).unwrap();
    assert!(metrics.starts_with("label,tp,fp,tn,fn,tpr,fpr,precision,f1\n"));
    assert_eq!(metrics.lines().count(), 1 + ev.rows.len());
    assert!(out.join(SUMMARY_FILE).exists());

    let plots = experiment::report(out).unwrap();
    assert!(plots.contains(&out.join(PLOTS_DIR).join("loss.svg")));
    assert!(plots.contains(&out.join(PLOTS_DIR).join("pr_curve.svg")));
    assert_eq!(plots.len(), 2 + paths.len());
    assert!(out.join(CALIBRATION_FILE).exists());
}

#[test]
fn counts_csv_is_evaluated() {
    let dir = tempfile::tempdir().unwrap();
    let rows = experiment::evaluate_counts(&common::data_path("published_counts.csv"), dir.path()).unwrap();
    assert_eq!(rows.len(), common::published_rows().len());
    let metrics = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(metrics.lines().count(), rows.len() + 1);
}
