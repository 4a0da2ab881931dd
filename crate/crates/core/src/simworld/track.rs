use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackKind {
    Straight,
    Circle,
    SCurve,
}

impl TrackKind {
    pub fn name(self) -> &'static str {
        match self {
            TrackKind::Straight => "straight",
            TrackKind::Circle => "circle",
            TrackKind::SCurve => "s-curve",
        }
    }
}

/// A closed centerline parameterised by arc length, with a lane and a wider
/// drivable road around it. Curvature is positive when the road bends
/// towards positive lateral offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub kind: TrackKind,
    pub length: f64,
    pub lane_half_width: f64,
    pub road_half_width: f64,
}

impl Track {
    pub const DEFAULT_LANE_HALF_WIDTH: f64 = 0.1;
    pub const DEFAULT_ROAD_HALF_WIDTH: f64 = 0.2;

    pub fn new(kind: TrackKind, length: f64, lane_half_width: f64, road_half_width: f64) -> Result<Self> {
        let track = Self {
            kind,
            length,
            lane_half_width,
            road_half_width,
        };
        track.validate()?;
        Ok(track)
    }

    /// Default geometry: a 100-unit straight, a circle of radius 2, and an
    /// s-curve alternating ±0.6 curvature every 8 units.
    pub fn standard(kind: TrackKind) -> Self {
        let length = match kind {
            TrackKind::Straight => 100.0,
            TrackKind::Circle => 2.0 * std::f64::consts::PI * 2.0,
            TrackKind::SCurve => 16.0,
        };
        Self {
            kind,
            length,
            lane_half_width: Self::DEFAULT_LANE_HALF_WIDTH,
            road_half_width: Self::DEFAULT_ROAD_HALF_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Config(format!("track length must be positive, got {}", self.length)));
        }
        if !(0.0 < self.lane_half_width && self.lane_half_width < self.road_half_width) {
            return Err(Error::Config(format!(
                "need 0 < lane_half_width ({}) < road_half_width ({})",
                self.lane_half_width, self.road_half_width
            )));
        }
        Ok(())
    }

    /// Centerline curvature at arc position `s` (wrapped onto the loop).
    pub fn curvature(&self, s: f64) -> f64 {
        match self.kind {
            TrackKind::Straight => 0.0,
            TrackKind::Circle => 2.0 * std::f64::consts::PI / self.length,
            TrackKind::SCurve => {
                let phase = s.rem_euclid(self.length) / self.length;
                0.6 * (2.0 * std::f64::consts::PI * phase).sin()
            }
        }
    }
}
