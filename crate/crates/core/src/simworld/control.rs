use serde::{Deserialize, Serialize};

use super::perceive::LaneEstimate;
use super::vehicle::VehicleState;
use crate::guard::{track_speed, Actuation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    pub kp: f64,
    pub kd: f64,
    pub target_speed: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kp: 9.0,
            kd: 2.0,
            target_speed: 0.3,
        }
    }
}

/// PD lane keeper on the perceived offset, with proportional speed tracking.
#[derive(Debug, Clone)]
pub struct LaneKeeper {
    config: ControllerConfig,
    previous: Option<f64>,
}

impl LaneKeeper {
    pub fn new(config: ControllerConfig) -> Self {
        Self { config, previous: None }
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Forgets the derivative history, e.g. after the vehicle is repositioned.
    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn act(&mut self, estimate: &LaneEstimate, state: &VehicleState, dt: f64) -> Actuation {
        let offset = estimate.lateral_offset_est;
        let rate = self.previous.map_or(0.0, |p| (offset - p) / dt);
        self.previous = Some(offset);
        let steering = (-self.config.kp * offset - self.config.kd * rate).clamp(-1.0, 1.0);
        let (throttle, brake) = track_speed(state.speed, self.config.target_speed);
        Actuation {
            steering,
            throttle,
            brake,
            target_speed: self.config.target_speed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(offset: f64) -> LaneEstimate {
        LaneEstimate {
            lateral_offset_est: offset,
            confidence: 1.0,
        }
    }

    #[test]
    fn steady_zero_estimate_means_zero_steering() {
        let mut c = LaneKeeper::new(ControllerConfig::default());
        let s = VehicleState::at_speed(0.3);
        c.act(&est(0.0), &s, 1.0 / 12.0);
        assert_eq!(c.act(&est(0.0), &s, 1.0 / 12.0).steering, 0.0);
    }

    #[test]
    fn positive_offset_steers_negative() {
        let mut c = LaneKeeper::new(ControllerConfig::default());
        let a = c.act(&est(0.02), &VehicleState::at_speed(0.3), 1.0 / 12.0);
        assert!(a.steering < 0.0);
    }

    #[test]
    fn overspeed_brakes() {
        let mut c = LaneKeeper::new(ControllerConfig::default());
        let a = c.act(&est(0.0), &VehicleState::at_speed(0.5), 1.0 / 12.0);
        assert!(a.brake > 0.0);
        assert_eq!(a.throttle, 0.0);
    }
}
