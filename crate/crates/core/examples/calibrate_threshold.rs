//! Fits a Gamma distribution to nominal errors and derives the alarm
//! threshold and guard bands in both band modes.
//!
//! cargo run --release --example calibrate_threshold

use laneguard::calibration::{estimate_threshold, gamma_cdf, BandMode, GammaParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

fn main() -> laneguard::Result<()> {
    // Stand-in for nominal reconstruction errors: Gamma(2, 0.0006).
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = Gamma::new(2.0, 0.0006).expect("valid gamma");
    let errors: Vec<f64> = (0..5000).map(|_| truth.sample(&mut rng)).collect();
    let held: Vec<f64> = (0..5000).map(|_| truth.sample(&mut rng)).collect();

    for mode in [BandMode::Calibrated, BandMode::Fixed] {
        let c = estimate_threshold(&errors, 0.05, mode)?;
        let t = c.thresholds;
        let exceed = held.iter().filter(|&&e| e > t.theta).count() as f64 / held.len() as f64;
        println!(
            "{mode:?}: fit k={:.3} s={:.6} ({:?}), theta {:.6}, bands {:.6} / {:.6}, held-out exceedance {exceed:.4}",
            c.fit.params.shape, c.fit.params.scale, c.fit.estimator, t.theta, t.band1, t.band2
        );
    }

    let exp = GammaParams::new(1.0, 1.0)?;
    println!("P(X <= 2.995732) for Exp(1) = {:.6}", gamma_cdf(&exp, 2.995732)?);
    Ok(())
}
