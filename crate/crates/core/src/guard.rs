//! Graduated safety guards: band classification of the filtered error, the
//! actuation override, and the latching brake/disengage state machine.

use serde::{Deserialize, Serialize};

use crate::calibration::ThresholdConfig;
use crate::error::{Error, Result};

/// Control output of the driving stack, or its guarded override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Actuation {
    /// In `[-1, 1]`, fraction of full steering lock.
    pub steering: f64,
    /// In `[0, 1]`.
    pub throttle: f64,
    /// In `[0, 1]`.
    pub brake: f64,
    pub target_speed: f64,
}

impl Actuation {
    pub fn validate(&self) -> Result<()> {
        let ok = (-1.0..=1.0).contains(&self.steering)
            && (0.0..=1.0).contains(&self.throttle)
            && (0.0..=1.0).contains(&self.brake)
            && self.target_speed >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("actuation out of range: {self:?}")))
        }
    }
}

/// Proportional gain of the speed tracker, per unit of speed error.
pub const SPEED_GAIN: f64 = 4.0;

/// Throttle/brake pair that drives `speed` towards `target`.
pub fn track_speed(speed: f64, target: f64) -> (f64, f64) {
    let err = target - speed;
    if err >= 0.0 {
        ((SPEED_GAIN * err).min(1.0), 0.0)
    } else {
        (0.0, (-SPEED_GAIN * err).min(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum GuardLevel {
    #[default]
    #[serde(rename = "none")]
    None,
    L1,
    L2,
    L3,
}

impl GuardLevel {
    pub fn name(self) -> &'static str {
        match self {
            GuardLevel::None => "none",
            GuardLevel::L1 => "L1",
            GuardLevel::L2 => "L2",
            GuardLevel::L3 => "L3",
        }
    }
}

/// Maps a filtered error to a guard level using half-open bands:
/// `(θ, ∞)` is anomalous; `[floor, band1)` is L1, `[band1, band2)` L2 and
/// `[band2, ∞)` L3. An anomalous value below the L1 floor also yields L3.
pub fn classify_level(score: f64, config: &ThresholdConfig) -> Result<GuardLevel> {
    if !score.is_finite() {
        return Err(Error::Numeric(format!("cannot classify non-finite error {score}")));
    }
    Ok(if score <= config.theta {
        GuardLevel::None
    } else if score >= config.band2 {
        GuardLevel::L3
    } else if score >= config.band1 {
        GuardLevel::L2
    } else if score >= config.l1_floor {
        GuardLevel::L1
    } else {
        GuardLevel::L3
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveMode {
    #[default]
    Autonomous,
    Braking,
    Disengaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GuardState {
    pub mode: DriveMode,
    pub active_level: GuardLevel,
    pub warning_active: bool,
    /// Consecutive frames spent at `active_level`.
    pub frames_in_level: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuardConfig {
    /// Target-speed multiplier applied at L2.
    pub speed_factor: f64,
    /// Error at or above which L1 raises the lane-departure warning; below it
    /// L1 only self-heals.
    pub warn_floor: f64,
    /// Speed at or below which an emergency stop counts as complete.
    pub stop_epsilon: f64,
}

impl GuardConfig {
    pub fn for_thresholds(thresholds: &ThresholdConfig) -> Self {
        Self {
            speed_factor: 0.5,
            warn_floor: thresholds.warn_floor(),
            stop_epsilon: 0.05,
        }
    }
}

/// Applies the guard for `level` to the driving stack's `actuation`.
///
/// `score` is the error that produced `level` and `speed` the current
/// vehicle speed. Steering always passes through untouched.
pub fn apply_guards(
    level: GuardLevel,
    score: f64,
    speed: f64,
    actuation: Actuation,
    state: GuardState,
    config: &GuardConfig,
) -> (Actuation, GuardState) {
    let frames_in_level = if level == state.active_level {
        state.frames_in_level.saturating_add(1)
    } else {
        1
    };
    let mut next = GuardState {
        mode: state.mode,
        active_level: level,
        warning_active: level != GuardLevel::None && score >= config.warn_floor,
        frames_in_level,
    };
    let full_brake = Actuation {
        steering: actuation.steering,
        throttle: 0.0,
        brake: 1.0,
        target_speed: 0.0,
    };

    match state.mode {
        DriveMode::Disengaged => (full_brake, next),
        DriveMode::Braking => {
            if speed <= config.stop_epsilon {
                next.mode = DriveMode::Disengaged;
            }
            (full_brake, next)
        }
        DriveMode::Autonomous => match level {
            GuardLevel::None | GuardLevel::L1 => (actuation, next),
            GuardLevel::L2 => {
                let target_speed = actuation.target_speed * config.speed_factor;
                let (tracked_throttle, brake) = track_speed(speed, target_speed);
                let out = Actuation {
                    steering: actuation.steering,
                    throttle: actuation.throttle.min(tracked_throttle),
                    brake: actuation.brake.max(brake),
                    target_speed,
                };
                (out, next)
            }
            GuardLevel::L3 => {
                next.mode = DriveMode::Braking;
                (full_brake, next)
            }
        },
    }
}

/// Hands control back to the driving stack once the vehicle is in a safe
/// zone. Only valid from the disengaged mode.
pub fn guard_reset(state: GuardState) -> Result<GuardState> {
    if state.mode != DriveMode::Disengaged {
        return Err(Error::State(format!(
            "guard reset requires disengaged mode, found {:?}",
            state.mode
        )));
    }
    Ok(GuardState::default())
}
