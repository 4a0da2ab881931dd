//! Drives the circle track into heavy fog with and without safety guards.
//! A small autoencoder is trained and calibrated first; then the same seeded
//! episode runs twice and the violation counts are compared.
//!
//! cargo run --release --example closed_loop_episode

use std::sync::Arc;

use laneguard::autoencoder::{reconstruction_errors, AutoencoderModel, TrainConfig, Variant};
use laneguard::calibration::{estimate_threshold, BandMode};
use laneguard::monitor::{alarm_scores, FilterConfig, Monitor};
use laneguard::simworld::{
    nominal_frames, run_episode, AnomalyKind, AnomalySchedule, Camera, EpisodeConfig, RunOptions, Track, TrackKind,
    DEFAULT_DT,
};

fn main() -> laneguard::Result<()> {
    let camera = Camera::default();
    let circle = Track::standard(TrackKind::Circle);
    let train_frames = nominal_frames(&circle, &camera, 1000, 0.3, DEFAULT_DT, 0);
    let model = AutoencoderModel::init(Variant::Simple, &[camera.shape.len(), 64, camera.shape.len()], 0)?;
    let config = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let model = laneguard::autoencoder::train(&model, &train_frames, &config)?.model;

    let filter = FilterConfig::default();
    let mut scores = Vec::new();
    for seed in 1..=8 {
        let drive = nominal_frames(&circle, &camera, 150, 0.3, DEFAULT_DT, seed);
        scores.extend(alarm_scores(&reconstruction_errors(&model, &drive)?, filter)?);
    }
    let calibration = estimate_threshold(&scores, 0.05, BandMode::Calibrated)?;
    println!("theta {:.5}, bands {:.5} / {:.5}", calibration.thresholds.theta, calibration.thresholds.band1, calibration.thresholds.band2);

    let model = Arc::new(model);
    let mut episode = EpisodeConfig::new(circle, 42);
    episode.n_frames = 720;
    episode.schedule = vec![AnomalySchedule {
        kind: AnomalyKind::Fog,
        start_frame: 300,
        ramp_frames: 48,
        peak_intensity: 1.0,
    }];
    for guards in [false, true] {
        episode.guards_enabled = guards;
        let monitor = Monitor::new(model.clone(), calibration.thresholds, filter)?;
        let log = run_episode(&episode, monitor, &RunOptions::default())?;
        let first_alarm = log.frames.iter().find(|f| f.trigger != laneguard::monitor::Trigger::None);
        println!(
            "guards {}: {} violations, {} restarts, {} disengagements, first alarm at frame {:?}",
            if guards { "on " } else { "off" },
            log.summary.violations.len(),
            log.summary.restarts,
            log.summary.disengagements,
            first_alarm.map(|f| f.frame_index)
        );
    }
    Ok(())
}
