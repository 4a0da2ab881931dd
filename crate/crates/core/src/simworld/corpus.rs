use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::render::{render, Camera};
use super::track::Track;
use super::vehicle::VehicleState;
use crate::frame::Frame;

/// Stationary spread and clamp of the randomized lateral offset.
const OFFSET_SPREAD: f64 = 0.02;
const OFFSET_LIMIT: f64 = 0.05;
/// Stationary spread and clamp of the randomized heading error.
const HEADING_SPREAD: f64 = 0.04;
const HEADING_LIMIT: f64 = 0.1;
/// Per-frame mean reversion of both random walks.
const REVERSION: f64 = 0.05;

/// Nominal-driving frames along `track`: the pose advances at `speed·dt`
/// per frame while offset and heading follow slow mean-reverting random
/// walks around the centerline.
pub fn nominal_frames(track: &Track, camera: &Camera, n: usize, speed: f64, dt: f64, seed: u64) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let kick = (1.0 - (1.0 - REVERSION) * (1.0 - REVERSION)).sqrt();
    let mut state = VehicleState {
        arc_position: rng.random_range(0.0..track.length),
        lateral_offset: OFFSET_SPREAD * unit.sample(&mut rng),
        heading_error: HEADING_SPREAD * unit.sample(&mut rng),
        speed,
    };
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        state.lateral_offset = state.lateral_offset.clamp(-OFFSET_LIMIT, OFFSET_LIMIT);
        state.heading_error = state.heading_error.clamp(-HEADING_LIMIT, HEADING_LIMIT);
        frames.push(render(track, &state, camera));
        state.arc_position = (state.arc_position + speed * dt).rem_euclid(track.length);
        state.lateral_offset =
            (1.0 - REVERSION) * state.lateral_offset + kick * OFFSET_SPREAD * unit.sample(&mut rng);
        state.heading_error =
            (1.0 - REVERSION) * state.heading_error + kick * HEADING_SPREAD * unit.sample(&mut rng);
    }
    frames
}
