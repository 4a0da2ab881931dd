use serde::{Deserialize, Serialize};

use super::render::Camera;
use crate::frame::Frame;

/// Lane-line pixels must reach this intensity whatever the percentile says,
/// so a washed-out frame yields no lane evidence at all.
pub const BRIGHT_FLOOR: f64 = 0.7;
pub const BRIGHT_PERCENTILE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneEstimate {
    pub lateral_offset_est: f64,
    pub confidence: f64,
}

/// Estimates the lateral offset from the lane lines in the bottom third of
/// the frame: bright pixels are mapped to ground positions and a pair of
/// lines `2·lane_half_width` apart is fitted to them.
pub fn perceive(frame: &Frame, camera: &Camera, lane_half_width: f64) -> LaneEstimate {
    let (h, w) = (frame.height(), frame.width());
    let first_row = h - h / 3;
    let mut values: Vec<f64> = Vec::with_capacity((h - first_row) * w);
    for row in first_row..h {
        for col in 0..w {
            values.push(frame.get(0, row, col));
        }
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let idx = ((sorted.len() as f64 * BRIGHT_PERCENTILE).ceil() as usize).clamp(1, sorted.len()) - 1;
    let cut = sorted[idx].max(BRIGHT_FLOOR);

    let mut xs = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v >= cut {
            let row = first_row + i / w;
            let Some(z) = camera.row_depth(row) else { continue };
            xs.push(camera.lateral(i % w, z));
        }
    }
    if xs.is_empty() {
        return LaneEstimate {
            lateral_offset_est: 0.0,
            confidence: 0.0,
        };
    }

    let mut center = xs.iter().sum::<f64>() / xs.len() as f64;
    for _ in 0..20 {
        let next = xs
            .iter()
            .map(|&x| if x < center { x + lane_half_width } else { x - lane_half_width })
            .sum::<f64>()
            / xs.len() as f64;
        let done = (next - center).abs() < 1e-12;
        center = next;
        if done {
            break;
        }
    }
    let tolerance = 0.25 * lane_half_width;
    let on_lines = xs
        .iter()
        .filter(|&&x| {
            let dl = (x - (center - lane_half_width)).abs();
            let dr = (x - (center + lane_half_width)).abs();
            dl.min(dr) <= tolerance
        })
        .count();
    LaneEstimate {
        lateral_offset_est: -center,
        confidence: on_lines as f64 / xs.len() as f64,
    }
}
