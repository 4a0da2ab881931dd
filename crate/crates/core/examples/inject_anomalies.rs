//! Renders a camera frame, corrupts it with each anomaly kind at several
//! intensities, and shows what the lane perception makes of it. Frames are
//! written as PGM images.
//!
//! cargo run --release --example inject_anomalies

use laneguard::simworld::{
    inject_anomaly, perceive, render, AnomalyKind, Camera, Track, TrackKind, VehicleState,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> laneguard::Result<()> {
    let track = Track::standard(TrackKind::Circle);
    let camera = Camera::default();
    let state = VehicleState {
        lateral_offset: 0.02,
        ..VehicleState::at_speed(0.3)
    };
    let clean = render(&track, &state, &camera);
    let dir = std::env::temp_dir().join("laneguard_anomalies");
    std::fs::create_dir_all(&dir).map_err(|e| laneguard::Error::Data(e.to_string()))?;
    clean.write_pgm(dir.join("clean.pgm"))?;
    let est = perceive(&clean, &camera, track.lane_half_width);
    println!("clean: offset estimate {:+.4} (true {:+.4}), confidence {:.2}", est.lateral_offset_est, state.lateral_offset, est.confidence);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for kind in AnomalyKind::ALL {
        for intensity in [0.3, 0.6, 1.0] {
            let frame = inject_anomaly(&clean, kind, intensity, &mut rng)?;
            frame.write_pgm(dir.join(format!("{}_{intensity}.pgm", kind.name())))?;
            let est = perceive(&frame, &camera, track.lane_half_width);
            println!(
                "{:<6} {intensity:.1}: offset estimate {:+.4}, confidence {:.2}",
                kind.name(),
                est.lateral_offset_est,
                est.confidence
            );
        }
    }
    println!("frames written to {}", dir.display());
    Ok(())
}
