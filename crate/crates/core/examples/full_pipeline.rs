//! The whole experiment in one output directory: corpus, training,
//! calibration, paired guards-off/on simulation, evaluation and plots. Uses a
//! reduced configuration so it finishes in about a minute; pass an output
//! directory as the first argument to keep the artifacts.
//!
//! cargo run --release --example full_pipeline -- /tmp/laneguard_run

use std::path::PathBuf;

use laneguard::autoencoder::Variant;
use laneguard::experiment::{self, benchmark_episodes, ExperimentConfig};

fn main() -> laneguard::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("laneguard_pipeline"));
    let mut cfg = ExperimentConfig::default();
    cfg.corpus.frames_per_track = 400;
    cfg.corpus.calibration_frames_per_track = 600;
    cfg.model.variant = Variant::Simple;
    cfg.model.layer_dims = Some(vec![cfg.camera.shape.len(), 64, cfg.camera.shape.len()]);
    cfg.train.epochs = 15;
    cfg.simulation.episodes = benchmark_episodes(4, 1000);
    cfg.echo(&out)?;

    let manifest = experiment::generate(&cfg, &out)?;
    println!("corpus: {} training, {} calibration frames", manifest.total_train, manifest.total_calibration);
    let trained = experiment::train_command(&cfg, &out)?;
    println!("final training loss {:.5}", trained.loss_history.last().copied().unwrap_or(f64::NAN));
    let calibration = experiment::calibrate_command(&cfg, &out)?;
    println!("theta {:.5}", calibration.thresholds.theta);
    let logs = experiment::simulate_command(&cfg, &out)?;
    println!("{} episode logs", logs.len());
    let ev = experiment::evaluate(&out, cfg.evaluation.unit())?;
    for row in ev.rows.iter().filter(|r| r.label.starts_with("pooled")) {
        println!("{}: tpr {:?} fpr {:?}", row.label, row.rates.tpr, row.rates.fpr);
    }
    println!("auc-prc {:?} at prevalence {:?}", ev.auc_prc, ev.prevalence);
    println!("prevention {:?}", ev.prevention);
    let plots = experiment::report(&out)?;
    println!("{} plots under {}", plots.len(), out.join(experiment::PLOTS_DIR).display());
    Ok(())
}
