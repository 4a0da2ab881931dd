use serde::{Deserialize, Serialize};

use super::track::Track;
use crate::guard::Actuation;

/// Pose relative to the track centerline.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// Arc position along the centerline.
    pub arc_position: f64,
    /// Signed lateral offset from the centerline.
    pub lateral_offset: f64,
    /// Heading relative to the centerline tangent, radians.
    pub heading_error: f64,
    pub speed: f64,
}

impl VehicleState {
    pub fn at_speed(speed: f64) -> Self {
        Self {
            speed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub wheelbase: f64,
    /// Front-wheel angle at full steering, radians.
    pub max_steer: f64,
    /// Acceleration at full throttle.
    pub accel: f64,
    /// Deceleration at full brake.
    pub brake_decel: f64,
    pub max_speed: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 0.1,
            max_steer: 0.5,
            accel: 0.5,
            brake_decel: 1.0,
            max_speed: 10.0,
        }
    }
}

/// Kinematic bicycle integrated in the track frame with forward Euler.
pub fn vehicle_step(
    state: &VehicleState,
    actuation: &Actuation,
    dt: f64,
    track: &Track,
    params: &VehicleParams,
) -> VehicleState {
    debug_assert!(dt > 0.0);
    let accel = params.accel * actuation.throttle - params.brake_decel * actuation.brake;
    let speed = (state.speed + accel * dt).clamp(0.0, params.max_speed);
    let yaw_rate = speed * (params.max_steer * actuation.steering).tan() / params.wheelbase;
    let heading_error =
        state.heading_error + (yaw_rate - track.curvature(state.arc_position) * speed) * dt;
    let lateral_offset = state.lateral_offset + speed * heading_error.sin() * dt;
    let arc_position = state.arc_position + speed * heading_error.cos() * dt;
    VehicleState {
        arc_position,
        lateral_offset,
        heading_error,
        speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::TrackKind;

    fn coast(steering: f64) -> Actuation {
        Actuation {
            steering,
            throttle: 0.0,
            brake: 0.0,
            target_speed: 0.0,
        }
    }

    #[test]
    fn parked_vehicle_stays_put() {
        let track = Track::standard(TrackKind::Circle);
        let s = VehicleState {
            arc_position: 3.0,
            lateral_offset: 0.02,
            heading_error: 0.1,
            speed: 0.0,
        };
        let next = vehicle_step(&s, &coast(0.7), 0.1, &track, &VehicleParams::default());
        assert_eq!(next, s);
    }

    #[test]
    fn straight_line_advance() {
        let track = Track::standard(TrackKind::Straight);
        let s = VehicleState::at_speed(10.0);
        let next = vehicle_step(&s, &coast(0.0), 0.1, &track, &VehicleParams::default());
        assert!((next.arc_position - 1.0).abs() < 1e-12);
        assert_eq!(next.lateral_offset, 0.0);
        assert_eq!(next.speed, 10.0);
    }

    #[test]
    fn steering_sets_the_heading_rate() {
        let track = Track::standard(TrackKind::Straight);
        let params = VehicleParams::default();
        let s = VehicleState::at_speed(0.3);
        let dt = 0.01;
        let next = vehicle_step(&s, &coast(0.4), dt, &track, &params);
        let expected = 0.3 * (params.max_steer * 0.4).tan() / params.wheelbase;
        assert!(((next.heading_error - s.heading_error) / dt - expected).abs() < 1e-12);
    }

    #[test]
    fn brake_never_makes_speed_negative() {
        let track = Track::standard(TrackKind::Straight);
        let mut s = VehicleState::at_speed(0.05);
        let brake = Actuation {
            brake: 1.0,
            ..coast(0.0)
        };
        for _ in 0..10 {
            let next = vehicle_step(&s, &brake, 1.0 / 12.0, &track, &VehicleParams::default());
            assert!(next.speed >= 0.0);
            assert!((next.lateral_offset - s.lateral_offset).abs() <= next.speed / 12.0 + 1e-15);
            s = next;
        }
        assert_eq!(s.speed, 0.0);
    }
}
