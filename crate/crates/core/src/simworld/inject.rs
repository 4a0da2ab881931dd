use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Fog,
    Rain,
    Snow,
    Night,
}

impl AnomalyKind {
    pub const ALL: [AnomalyKind; 4] = [AnomalyKind::Fog, AnomalyKind::Rain, AnomalyKind::Snow, AnomalyKind::Night];

    pub fn name(self) -> &'static str {
        match self {
            AnomalyKind::Fog => "fog",
            AnomalyKind::Rain => "rain",
            AnomalyKind::Snow => "snow",
            AnomalyKind::Night => "night",
        }
    }
}

impl std::str::FromStr for AnomalyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnomalyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown anomaly kind {s:?}")))
    }
}

/// An anomaly that ramps linearly from zero at `start_frame` to
/// `peak_intensity` over `ramp_frames`, then holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalySchedule {
    pub kind: AnomalyKind,
    pub start_frame: u64,
    pub ramp_frames: u64,
    pub peak_intensity: f64,
}

impl AnomalySchedule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.peak_intensity) {
            return Err(Error::Config(format!(
                "peak intensity must be in [0, 1], got {}",
                self.peak_intensity
            )));
        }
        Ok(())
    }

    pub fn intensity_at(&self, frame: u64) -> f64 {
        if frame < self.start_frame {
            return 0.0;
        }
        let elapsed = (frame - self.start_frame) as f64;
        if self.ramp_frames == 0 || elapsed >= self.ramp_frames as f64 {
            self.peak_intensity
        } else {
            self.peak_intensity * elapsed / self.ramp_frames as f64
        }
    }
}

const FOG_WEIGHT: f64 = 0.8;
const FOG_LEVEL: f64 = 0.5;
const RAIN_STREAKS: f64 = 400.0;
const RAIN_VALUE: f64 = 0.85;
const SNOW_FLAKES: f64 = 200.0;
const NIGHT_DIM: f64 = 0.9;

/// Applies a weather or lighting corruption of the given intensity.
pub fn inject_anomaly(frame: &Frame, kind: AnomalyKind, intensity: f64, rng: &mut impl Rng) -> Result<Frame> {
    if !(0.0..=1.0).contains(&intensity) {
        return Err(Error::Domain(format!("anomaly intensity must be in [0, 1], got {intensity}")));
    }
    let mut out = frame.clone();
    if intensity == 0.0 {
        return Ok(out);
    }
    let (channels, h, w) = (frame.channels(), frame.height(), frame.width());
    match kind {
        AnomalyKind::Fog => {
            let a = FOG_WEIGHT * intensity;
            for p in out.pixels_mut() {
                *p = (1.0 - a) * *p + a * FOG_LEVEL;
            }
            let radius = (3.0 * intensity).round() as usize;
            if radius > 0 {
                box_blur(&mut out, radius);
            }
        }
        AnomalyKind::Rain => {
            let streaks = (RAIN_STREAKS * intensity).round() as usize;
            for _ in 0..streaks {
                let row = rng.random_range(0..h);
                let col = rng.random_range(0..w);
                for k in 0..3 {
                    let (r, c) = (row + k, col + k);
                    if r < h && c < w {
                        for ch in 0..channels {
                            let i = out.index(ch, r, c);
                            out.pixels_mut()[i] = RAIN_VALUE;
                        }
                    }
                }
            }
        }
        AnomalyKind::Snow => {
            let flakes = (SNOW_FLAKES * intensity).round() as usize;
            for _ in 0..flakes {
                let row = rng.random_range(0..h);
                let col = rng.random_range(0..w);
                for ch in 0..channels {
                    let i = out.index(ch, row, col);
                    out.pixels_mut()[i] = 1.0;
                }
            }
        }
        AnomalyKind::Night => {
            let scale = 1.0 - NIGHT_DIM * intensity;
            for p in out.pixels_mut() {
                *p *= scale;
            }
        }
    }
    Ok(out)
}

/// Separable mean filter of the given radius, edges clamped.
fn box_blur(frame: &mut Frame, radius: usize) {
    let (channels, h, w) = (frame.channels(), frame.height(), frame.width());
    let r = radius as isize;
    let span = (2 * radius + 1) as f64;
    let mut tmp = vec![0.0; h * w];
    for ch in 0..channels {
        let plane = &mut frame.pixels_mut()[ch * h * w..(ch + 1) * h * w];
        for row in 0..h {
            for col in 0..w {
                let mut s = 0.0;
                for k in -r..=r {
                    let c = (col as isize + k).clamp(0, w as isize - 1) as usize;
                    s += plane[row * w + c];
                }
                tmp[row * w + col] = s / span;
            }
        }
        for row in 0..h {
            for col in 0..w {
                let mut s = 0.0;
                for k in -r..=r {
                    let rr = (row as isize + k).clamp(0, h as isize - 1) as usize;
                    s += tmp[rr * w + col];
                }
                plane[row * w + col] = s / span;
            }
        }
    }
}
