//! Walks the safety guards through every level: L1 warns, L2 slows the car,
//! L3 brakes until stopped and then latches into disengaged.
//!
//! cargo run --release --example guard_state_machine

use laneguard::calibration::ThresholdConfig;
use laneguard::guard::{apply_guards, classify_level, guard_reset, Actuation, GuardConfig, GuardState};

fn main() -> laneguard::Result<()> {
    let thresholds = ThresholdConfig::fixed_bands(0.05);
    let config = GuardConfig::for_thresholds(&thresholds);
    let command = Actuation {
        steering: 0.1,
        throttle: 0.4,
        brake: 0.0,
        target_speed: 0.3,
    };
    let mut state = GuardState::default();
    let mut speed: f64 = 0.3;
    for score in [0.03, 0.052, 0.057, 0.062, 0.065, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08] {
        let level = classify_level(score, &thresholds)?;
        let (out, next) = apply_guards(level, score, speed, command, state, &config);
        // Crude longitudinal response: brake removes 0.05 speed per frame.
        speed = (speed - 0.05 * out.brake).max(0.0);
        println!(
            "score {score:.3} -> {:<4} mode {:<10} warn {:<5} throttle {:.2} brake {:.2} target {:.2} speed {speed:.2}",
            level.name(),
            format!("{:?}", next.mode),
            next.warning_active,
            out.throttle,
            out.brake,
            out.target_speed
        );
        state = next;
    }
    state = guard_reset(state)?;
    println!("after reset: {state:?}");
    Ok(())
}
