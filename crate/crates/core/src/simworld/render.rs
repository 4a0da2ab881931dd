use serde::{Deserialize, Serialize};

use super::track::Track;
use super::vehicle::VehicleState;
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameShape};

pub const SKY_TOP: f64 = 0.75;
pub const SKY_HORIZON: f64 = 0.55;
pub const OFF_ROAD: f64 = 0.25;
pub const ROAD: f64 = 0.45;
pub const LANE_LINE: f64 = 0.95;
/// Half-width of a painted lane line, world units.
pub const LINE_HALF_WIDTH: f64 = 0.008;

/// Pinhole camera looking along the heading, `height` above a flat road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Camera {
    pub shape: FrameShape,
    /// Image row of the horizon line.
    pub horizon_row: f64,
    /// Focal length in pixels.
    pub focal: f64,
    pub height: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            shape: FrameShape::default(),
            horizon_row: 12.0,
            focal: 32.0,
            height: 0.1,
        }
    }
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        let rows = self.shape.height as f64;
        if self.shape.is_empty() || !(self.horizon_row >= 0.0 && self.horizon_row < rows - 1.0) {
            return Err(Error::Config(format!("camera horizon {} outside the image", self.horizon_row)));
        }
        if !(self.focal > 0.0 && self.height > 0.0) {
            return Err(Error::Config("camera focal length and height must be positive".into()));
        }
        Ok(())
    }

    /// Ground distance seen at the centre of `row`, if below the horizon.
    pub fn row_depth(&self, row: usize) -> Option<f64> {
        let below = row as f64 + 0.5 - self.horizon_row;
        (below > 0.0).then(|| self.height * self.focal / below)
    }

    /// Lateral ground position seen at the centre of `col` at `depth`.
    pub fn lateral(&self, col: usize, depth: f64) -> f64 {
        (col as f64 + 0.5 - self.shape.width as f64 / 2.0) * depth / self.focal
    }
}

/// Lateral position of the lane centre at `depth` ahead, in camera
/// coordinates (positive to the right).
pub fn lane_center(track: &Track, state: &VehicleState, depth: f64) -> f64 {
    let kappa = track.curvature(state.arc_position);
    -state.lateral_offset - state.heading_error * depth + 0.5 * kappa * depth * depth
}

/// Length of `[lo, hi] ∩ [a, b]`.
fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// Rasterises the road ahead. Each ground pixel integrates the surface over
/// its horizontal footprint, so the image varies smoothly with the pose.
pub fn render(track: &Track, state: &VehicleState, camera: &Camera) -> Frame {
    let FrameShape {
        channels,
        height,
        width,
    } = camera.shape;
    let mut plane = vec![0.0; height * width];
    for row in 0..height {
        let line = &mut plane[row * width..(row + 1) * width];
        let Some(z) = camera.row_depth(row) else {
            let t = (row as f64 + 0.5) / camera.horizon_row.max(1.0);
            line.fill(SKY_TOP + (SKY_HORIZON - SKY_TOP) * t.min(1.0));
            continue;
        };
        let footprint = z / camera.focal;
        let center = lane_center(track, state, z);
        let line_half = LINE_HALF_WIDTH.max(0.5 * footprint);
        for (col, px) in line.iter_mut().enumerate() {
            let x = camera.lateral(col, z) - center;
            let (lo, hi) = (x - 0.5 * footprint, x + 0.5 * footprint);
            let road = overlap(lo, hi, -track.road_half_width, track.road_half_width) / footprint;
            let mut paint = 0.0;
            for edge in [-track.lane_half_width, track.lane_half_width] {
                paint += overlap(lo, hi, edge - line_half, edge + line_half);
            }
            let paint = (paint / footprint).min(1.0);
            let base = OFF_ROAD + (ROAD - OFF_ROAD) * road;
            *px = base + (LANE_LINE - base) * paint;
        }
    }
    let mut pixels = Vec::with_capacity(channels * plane.len());
    for _ in 0..channels {
        pixels.extend_from_slice(&plane);
    }
    Frame::from_clamped(camera.shape, pixels).expect("pixel count matches the camera shape")
}
