use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::control::{ControllerConfig, LaneKeeper};
use super::inject::{inject_anomaly, AnomalySchedule};
use super::perceive::perceive;
use super::render::{render, Camera};
use super::track::Track;
use super::vehicle::{vehicle_step, VehicleParams, VehicleState};
use super::{detect_violation, ViolationKind};
use crate::calibration::ThresholdConfig;
use crate::error::{Error, Result};
use crate::guard::{apply_guards, guard_reset, Actuation, DriveMode, GuardConfig, GuardLevel, GuardState};
use crate::monitor::{FilterConfig, Monitor, Trigger};

/// 12 frames per second.
pub const DEFAULT_DT: f64 = 1.0 / 12.0;
pub const DEFAULT_EPISODE_FRAMES: u64 = 2400;
/// Frames whose injected intensity reaches this level count as anomalous.
pub const GROUND_TRUTH_FLOOR: f64 = 0.1;
/// Largest initial lateral offset drawn for an episode.
const START_OFFSET: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub track: Track,
    #[serde(default)]
    pub camera: Camera,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub schedule: Vec<AnomalySchedule>,
    pub guards_enabled: bool,
    /// Guard constants; derived from the monitor thresholds when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<GuardConfig>,
    pub seed: u64,
    pub n_frames: u64,
    pub dt: f64,
}

impl EpisodeConfig {
    pub fn new(track: Track, seed: u64) -> Self {
        Self {
            track,
            camera: Camera::default(),
            vehicle: VehicleParams::default(),
            controller: ControllerConfig::default(),
            schedule: Vec::new(),
            guards_enabled: false,
            guard: None,
            seed,
            n_frames: DEFAULT_EPISODE_FRAMES,
            dt: DEFAULT_DT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.track.validate()?;
        self.camera.validate()?;
        for s in &self.schedule {
            s.validate()?;
        }
        if self.n_frames == 0 {
            return Err(Error::Config("an episode needs at least one frame".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    /// Strongest scheduled intensity at `frame`.
    pub fn intensity_at(&self, frame: u64) -> f64 {
        self.schedule
            .iter()
            .map(|s| s.intensity_at(frame))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Writes every (corrupted) camera frame as a numbered PGM file.
    pub dump_frames: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub seed: u64,
    pub config: EpisodeConfig,
    pub thresholds: ThresholdConfig,
    pub filter: FilterConfig,
    pub guard: GuardConfig,
    pub model_variant: String,
    pub layer_dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub intensity: f64,
    pub ground_truth_anomalous: bool,
    pub raw_error: f64,
    pub filtered_error: f64,
    pub forecast_max: f64,
    pub trigger: Trigger,
    pub level: GuardLevel,
    pub mode: DriveMode,
    pub warning: bool,
    pub offset_estimate: f64,
    pub confidence: f64,
    pub actuation: Actuation,
    pub state: VehicleState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<ViolationKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub frame_index: u64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub n_frames: u64,
    pub violations: Vec<Violation>,
    pub restarts: u32,
    pub disengagements: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub frames: Vec<FrameRecord>,
    pub summary: EpisodeSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogLine {
    Header(EpisodeHeader),
    Frame(FrameRecord),
    Trailer(EpisodeSummary),
}

impl EpisodeLog {
    pub fn violations(&self) -> &[Violation] {
        &self.summary.violations
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        let line = |v: &LogLine| serde_json::to_string(v).expect("log records serialize");
        writeln!(out, "{}", line(&LogLine::Header(self.header.clone())))?;
        for f in &self.frames {
            writeln!(out, "{}", line(&LogLine::Frame(f.clone())))?;
        }
        writeln!(out, "{}", line(&LogLine::Trailer(self.summary.clone())))
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self> {
        let mut header = None;
        let mut frames = Vec::new();
        let mut summary = None;
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(format!("log line {}: {e}", n + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine =
                serde_json::from_str(&line).map_err(|e| Error::Parse(format!("log line {}: {e}", n + 1)))?;
            match parsed {
                LogLine::Header(h) if header.is_none() && n == 0 => header = Some(h),
                LogLine::Frame(f) if header.is_some() && summary.is_none() => frames.push(f),
                LogLine::Trailer(t) if header.is_some() && summary.is_none() => summary = Some(t),
                _ => return Err(Error::Parse(format!("log line {} is out of order", n + 1))),
            }
        }
        match (header, summary) {
            (Some(header), Some(summary)) => Ok(Self {
                header,
                frames,
                summary,
            }),
            _ => Err(Error::Data("episode log is missing its header or trailer".into())),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }
}

/// Runs one closed-loop episode.
///
/// Each frame is rendered, corrupted per the schedule, perceived, turned into
/// an actuation by the lane keeper, scored by the monitor, optionally guarded,
/// and integrated. A collision puts the vehicle back on the centerline; a
/// disengagement (after an emergency stop) does the same and hands control
/// back to the lane keeper.
pub fn run_episode(config: &EpisodeConfig, mut monitor: Monitor, options: &RunOptions) -> Result<EpisodeLog> {
    config.validate()?;
    if monitor.model().input_dim() != config.camera.shape.len() {
        return Err(Error::Config(format!(
            "monitor model expects {} pixels but the camera renders {}",
            monitor.model().input_dim(),
            config.camera.shape.len()
        )));
    }
    if let Some(dir) = &options.dump_frames {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let track = &config.track;
    let thresholds = *monitor.thresholds();
    let guard_config = config.guard.unwrap_or_else(|| GuardConfig::for_thresholds(&thresholds));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut start_rng = ChaCha8Rng::seed_from_u64(config.seed);
    start_rng.set_stream(1);
    let mut state = VehicleState {
        arc_position: start_rng.random_range(0.0..track.length),
        lateral_offset: start_rng.random_range(-START_OFFSET..=START_OFFSET),
        heading_error: 0.0,
        speed: config.controller.target_speed,
    };

    let mut keeper = LaneKeeper::new(config.controller);
    let mut guard = GuardState::default();
    let mut frames = Vec::with_capacity(config.n_frames as usize);
    let mut violations = Vec::new();
    let mut restarts = 0;
    let mut disengagements = 0;
    let mut outside_lane = false;

    for i in 0..config.n_frames {
        let mut frame = render(track, &state, &config.camera);
        let mut intensity: f64 = 0.0;
        for s in &config.schedule {
            let level = s.intensity_at(i);
            if level > 0.0 {
                frame = inject_anomaly(&frame, s.kind, level, &mut rng)?;
            }
            intensity = intensity.max(level);
        }
        if let Some(dir) = &options.dump_frames {
            frame.write_pgm(dir.join(format!("frame_{i:05}.pgm")))?;
        }

        let estimate = perceive(&frame, &config.camera, track.lane_half_width);
        let command = keeper.act(&estimate, &state, config.dt);
        let verdict = monitor.step(&frame)?;
        let actuation = if config.guards_enabled {
            let (out, next) = apply_guards(verdict.level, verdict.score(), state.speed, command, guard, &guard_config);
            guard = next;
            out
        } else {
            command
        };

        state = vehicle_step(&state, &actuation, config.dt, track, &config.vehicle);
        let violation = match detect_violation(&state, track) {
            Some(ViolationKind::Collision) => Some(ViolationKind::Collision),
            Some(ViolationKind::LaneDeparture) if !outside_lane => Some(ViolationKind::LaneDeparture),
            _ => None,
        };
        outside_lane = state.lateral_offset.abs() > track.lane_half_width;
        if let Some(kind) = violation {
            violations.push(Violation { frame_index: i, kind });
        }

        frames.push(FrameRecord {
            frame_index: i,
            intensity,
            ground_truth_anomalous: intensity >= GROUND_TRUTH_FLOOR,
            raw_error: verdict.raw_error,
            filtered_error: verdict.filtered_error,
            forecast_max: verdict.forecast_max,
            trigger: verdict.trigger,
            level: verdict.level,
            mode: guard.mode,
            warning: guard.warning_active,
            offset_estimate: estimate.lateral_offset_est,
            confidence: estimate.confidence,
            actuation,
            state,
            violation,
        });

        if violation == Some(ViolationKind::Collision) {
            restarts += 1;
            recenter(&mut state);
            keeper.reset();
            outside_lane = false;
        }
        if guard.mode == DriveMode::Disengaged {
            disengagements += 1;
            recenter(&mut state);
            guard = guard_reset(guard)?;
            keeper.reset();
            outside_lane = false;
        }
    }

    Ok(EpisodeLog {
        header: EpisodeHeader {
            seed: config.seed,
            config: config.clone(),
            thresholds,
            filter: monitor.filter_config(),
            guard: guard_config,
            model_variant: monitor.model().variant().name().to_string(),
            layer_dims: monitor.model().layer_dims().to_vec(),
        },
        frames,
        summary: EpisodeSummary {
            n_frames: config.n_frames,
            violations,
            restarts,
            disengagements,
        },
    })
}

fn recenter(state: &mut VehicleState) {
    state.lateral_offset = 0.0;
    state.heading_error = 0.0;
}
