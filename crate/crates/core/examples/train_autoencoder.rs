//! Trains a small single-hidden-layer autoencoder on rendered nominal frames
//! and reports how reconstruction error separates clean from foggy frames.
//!
//! cargo run --release --example train_autoencoder

use laneguard::autoencoder::{mean_loss, reconstruction_errors, save_model, AutoencoderModel, TrainConfig, Variant};
use laneguard::simworld::{inject_anomaly, nominal_frames, AnomalyKind, Camera, Track, TrackKind, DEFAULT_DT};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> laneguard::Result<()> {
    let camera = Camera::default();
    let mut frames = Vec::new();
    for (i, kind) in [TrackKind::Straight, TrackKind::Circle, TrackKind::SCurve].into_iter().enumerate() {
        frames.extend(nominal_frames(&Track::standard(kind), &camera, 300, 0.3, DEFAULT_DT, i as u64));
    }

    let dims = [camera.shape.len(), 64, camera.shape.len()];
    let model = AutoencoderModel::init(Variant::Simple, &dims, 0)?;
    let config = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    println!("untrained loss {:.5}", mean_loss(&model, &frames)?);
    let outcome = laneguard::autoencoder::train(&model, &frames, &config)?;
    for (epoch, loss) in outcome.loss_history.iter().enumerate() {
        println!("epoch {:>2}  loss {loss:.5}", epoch + 1);
    }

    let held = nominal_frames(&Track::standard(TrackKind::Circle), &camera, 100, 0.3, DEFAULT_DT, 99);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let foggy = held
        .iter()
        .map(|f| inject_anomaly(f, AnomalyKind::Fog, 0.8, &mut rng))
        .collect::<laneguard::Result<Vec<_>>>()?;
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    println!("held-out clean error {:.5}", mean(reconstruction_errors(&outcome.model, &held)?));
    println!("held-out fog 0.8 error {:.5}", mean(reconstruction_errors(&outcome.model, &foggy)?));

    let path = std::env::temp_dir().join("laneguard_simple_model.json");
    save_model(&outcome.model, &path)?;
    println!("weights written to {}", path.display());
    Ok(())
}
