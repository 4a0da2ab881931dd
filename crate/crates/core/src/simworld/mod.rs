//! Synthetic closed-loop lane keeping: tracks, vehicle dynamics, a camera
//! renderer, weather injectors, the perception-driven controller under test,
//! and the episode runner.

mod control;
mod corpus;
mod episode;
mod inject;
mod perceive;
mod render;
mod track;
mod vehicle;

use serde::{Deserialize, Serialize};

pub use control::{ControllerConfig, LaneKeeper};
pub use corpus::nominal_frames;
pub use episode::{
    run_episode, EpisodeConfig, EpisodeHeader, EpisodeLog, EpisodeSummary, FrameRecord, RunOptions, Violation,
    DEFAULT_DT, DEFAULT_EPISODE_FRAMES, GROUND_TRUTH_FLOOR,
};
pub use inject::{inject_anomaly, AnomalyKind, AnomalySchedule};
pub use perceive::{perceive, LaneEstimate, BRIGHT_FLOOR};
pub use render::{lane_center, render, Camera};
pub use track::{Track, TrackKind};
pub use vehicle::{vehicle_step, VehicleParams, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    LaneDeparture,
    Collision,
}

/// Collision at or beyond the road edge, lane departure strictly between the
/// lane and road edges.
pub fn detect_violation(state: &VehicleState, track: &Track) -> Option<ViolationKind> {
    let d = state.lateral_offset.abs();
    if d >= track.road_half_width {
        Some(ViolationKind::Collision)
    } else if d > track.lane_half_width {
        Some(ViolationKind::LaneDeparture)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(d: f64) -> VehicleState {
        VehicleState {
            lateral_offset: d,
            ..VehicleState::default()
        }
    }

    #[test]
    fn violation_bands() {
        let track = Track::standard(TrackKind::Straight);
        assert_eq!(detect_violation(&at(0.0), &track), None);
        assert_eq!(detect_violation(&at(track.lane_half_width), &track), None);
        assert_eq!(
            detect_violation(&at(-1.1 * track.lane_half_width), &track),
            Some(ViolationKind::LaneDeparture)
        );
        assert_eq!(
            detect_violation(&at(track.road_half_width), &track),
            Some(ViolationKind::Collision)
        );
        assert_eq!(
            detect_violation(&at(-track.road_half_width), &track),
            Some(ViolationKind::Collision)
        );
    }
}
