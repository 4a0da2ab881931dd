//! End-to-end experiments driven by one JSON configuration: corpus
//! generation, training, calibration, simulation, evaluation and plots. Every
//! artifact of one experiment lives in a single output directory.

mod evaluate;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use evaluate::{
    evaluate, evaluate_counts, evaluate_into, evaluate_logs, load_log_paths, load_logs, EpisodeMetrics, Evaluation, TableRow, METRICS_FILE, PR_CURVE_FILE,
    SUMMARY_FILE, TRACES_DIR,
};
pub use report::{line_chart_svg, report, Series, PLOTS_DIR};

use crate::autoencoder::{
    load_model, reconstruction_errors, save_model, train, AutoencoderModel, NoiseSpec, TrainConfig, TrainOutcome,
    Variant,
};
use crate::calibration::{estimate_threshold, BandMode, Calibration, CalibrationReport};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::guard::GuardConfig;
use crate::monitor::{alarm_scores, FilterConfig, Monitor};
use crate::simworld::{
    nominal_frames, run_episode, AnomalyKind, AnomalySchedule, Camera, ControllerConfig, EpisodeConfig, EpisodeLog,
    RunOptions, Track, TrackKind, VehicleParams, DEFAULT_DT,
};

pub const CONFIG_FILE: &str = "config.json";
pub const CORPUS_DIR: &str = "corpus";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.json";
pub const LOSS_FILE: &str = "loss_history.csv";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const LOGS_DIR: &str = "logs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub tracks: Vec<TrackKind>,
    pub frames_per_track: usize,
    /// Held-out nominal frames per track used only for calibration.
    pub calibration_frames_per_track: usize,
    pub calibration_sequence_frames: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            tracks: vec![TrackKind::Straight, TrackKind::Circle, TrackKind::SCurve],
            frames_per_track: 1000,
            calibration_frames_per_track: 2000,
            calibration_sequence_frames: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Layer widths; the variant's defaults when absent.
    pub layer_dims: Option<Vec<usize>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Deep,
            layer_dims: None,
        }
    }
}

/// What the Gamma fit is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationScore {
    /// Per-frame reconstruction errors.
    Raw,
    /// The monitor's alarm score `max(ê, forecast_max)` over each nominal
    /// sequence, so the alarm rate itself matches the target.
    #[default]
    Alarm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub mode: BandMode,
    pub false_alarm_rate: f64,
    pub score: CalibrationScore,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            mode: BandMode::Calibrated,
            false_alarm_rate: 0.05,
            score: CalibrationScore::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub track: TrackKind,
    pub seed: u64,
    #[serde(default)]
    pub schedule: Vec<AnomalySchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub episodes: Vec<EpisodeSpec>,
    pub n_frames: u64,
    /// Run every episode twice, guards off and on.
    pub paired: bool,
    /// Guard setting when not paired.
    pub guards_enabled: bool,
    pub dump_frames: bool,
}

pub const BENCHMARK_FRAMES: u64 = 960;

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            episodes: benchmark_episodes(20, 1000),
            n_frames: BENCHMARK_FRAMES,
            paired: true,
            guards_enabled: false,
            dump_frames: false,
        }
    }
}

/// A mixed-anomaly benchmark: episodes cycle through the four anomaly kinds on
/// the two curved tracks. Each anomaly starts 600–720 frames in, ramps over
/// 4 s and peaks between 0.7 and 1.0, so roughly a third of every episode is
/// anomalous.
pub fn benchmark_episodes(count: usize, first_seed: u64) -> Vec<EpisodeSpec> {
    (0..count)
        .map(|i| {
            let seed = first_seed + i as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2);
            let track = if (i / AnomalyKind::ALL.len()) % 2 == 0 {
                TrackKind::Circle
            } else {
                TrackKind::SCurve
            };
            EpisodeSpec {
                track,
                seed,
                schedule: vec![AnomalySchedule {
                    kind: AnomalyKind::ALL[i % AnomalyKind::ALL.len()],
                    start_frame: rng.random_range(600..=720),
                    ramp_frames: 48,
                    peak_intensity: rng.random_range(0.7..=1.0),
                }],
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalUnit {
    Frame,
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub unit: EvalUnit,
    pub window_len: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            unit: EvalUnit::Frame,
            window_len: crate::evalkit::DEFAULT_WINDOW,
        }
    }
}

impl EvaluationConfig {
    pub fn unit(&self) -> crate::evalkit::Unit {
        match self.unit {
            EvalUnit::Frame => crate::evalkit::Unit::Frame,
            EvalUnit::Window => crate::evalkit::Unit::Window(self.window_len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Drives corpus generation, weight initialisation and training.
    pub seed: u64,
    pub camera: Camera,
    pub corpus: CorpusConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub calibration: CalibrationConfig,
    pub filter: FilterConfig,
    /// Guard constants; derived from the thresholds when absent.
    pub guard: Option<GuardConfig>,
    pub vehicle: VehicleParams,
    pub controller: ControllerConfig,
    pub simulation: SimulationConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            camera: Camera::default(),
            corpus: CorpusConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            calibration: CalibrationConfig::default(),
            filter: FilterConfig::default(),
            guard: None,
            vehicle: VehicleParams::default(),
            controller: ControllerConfig::default(),
            simulation: SimulationConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        self.filter.validate()?;
        if !(self.calibration.false_alarm_rate > 0.0 && self.calibration.false_alarm_rate < 1.0) {
            return Err(Error::Config(format!(
                "false_alarm_rate must be in (0, 1), got {}",
                self.calibration.false_alarm_rate
            )));
        }
        for spec in &self.simulation.episodes {
            for s in &spec.schedule {
                s.validate()?;
            }
        }
        Ok(())
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.model
            .layer_dims
            .clone()
            .unwrap_or_else(|| self.model.variant.default_dims(self.camera.shape.len()))
    }

    /// Training settings with the variant's input noise filled in.
    pub fn train_config(&self) -> TrainConfig {
        let mut cfg = self.train.clone();
        cfg.seed = self.seed;
        if self.model.variant == Variant::Denoising && cfg.noise.is_none() {
            cfg.noise = Some(NoiseSpec::gaussian(0.1));
        }
        cfg
    }

    /// Writes the effective configuration into `out`.
    pub fn echo(&self, out: &Path) -> Result<()> {
        write_file(&out.join(CONFIG_FILE), self.to_json().as_bytes())
    }

    fn track(&self, kind: TrackKind) -> Track {
        Track::standard(kind)
    }

    pub fn episode_config(&self, spec: &EpisodeSpec, guards_enabled: bool) -> EpisodeConfig {
        EpisodeConfig {
            track: self.track(spec.track),
            camera: self.camera,
            vehicle: self.vehicle,
            controller: self.controller,
            schedule: spec.schedule.clone(),
            guards_enabled,
            guard: self.guard,
            seed: spec.seed,
            n_frames: self.simulation.n_frames,
            dt: DEFAULT_DT,
        }
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::Data(format!("{} does not exist", path.display())));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Calibration,
}

impl Split {
    fn dir(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Calibration => "calibration",
        }
    }
}

/// One contiguous drive of nominal frames.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub track: TrackKind,
    pub seed: u64,
    pub frames: Vec<Frame>,
}

fn sequence_seed(cfg: &ExperimentConfig, split: Split, track_index: usize, sequence: usize) -> u64 {
    let split_tag = match split {
        Split::Train => 0,
        Split::Calibration => 1,
    };
    cfg.seed
        .wrapping_mul(1_000_003)
        .wrapping_add(split_tag * 100_000 + track_index as u64 * 1000 + sequence as u64)
}

/// Renders one split of the nominal corpus in memory. The training split is
/// one long drive per track; the calibration split is cut into independent
/// drives of `calibration_sequence_frames` so that it samples many stretches
/// of road.
pub fn nominal_corpus(cfg: &ExperimentConfig, split: Split) -> Result<Vec<Sequence>> {
    let c = &cfg.corpus;
    if c.tracks.is_empty() {
        return Err(Error::Config("corpus needs at least one track".into()));
    }
    let (total, chunk) = match split {
        Split::Train => (c.frames_per_track, c.frames_per_track.max(1)),
        Split::Calibration => {
            if c.calibration_sequence_frames == 0 {
                return Err(Error::Config("calibration sequences need at least one frame".into()));
            }
            (c.calibration_frames_per_track, c.calibration_sequence_frames)
        }
    };
    let mut out = Vec::new();
    for (t, &kind) in c.tracks.iter().enumerate() {
        let track = cfg.track(kind);
        let mut remaining = total;
        let mut index = 0;
        while remaining > 0 {
            let n = remaining.min(chunk);
            let seed = sequence_seed(cfg, split, t, index);
            out.push(Sequence {
                track: kind,
                seed,
                frames: nominal_frames(&track, &cfg.camera, n, cfg.controller.target_speed, DEFAULT_DT, seed),
            });
            remaining -= n;
            index += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackCount {
    pub track: TrackKind,
    pub train: usize,
    pub calibration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub split: Split,
    pub track: TrackKind,
    pub seed: u64,
    pub frames: usize,
}

impl SequenceEntry {
    fn frame_path(&self, corpus_dir: &Path, j: usize) -> PathBuf {
        corpus_dir
            .join(self.split.dir())
            .join(format!("{}_{}_{j:05}.pgm", self.track.name(), self.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub tracks: Vec<TrackCount>,
    pub total_train: usize,
    pub total_calibration: usize,
    pub sequences: Vec<SequenceEntry>,
}

/// Renders the corpus to `out/corpus/{train,calibration}/` as PGM files and
/// writes the manifest.
pub fn generate(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let corpus_dir = out.join(CORPUS_DIR);
    let mut tracks: Vec<TrackCount> = cfg
        .corpus
        .tracks
        .iter()
        .map(|&track| TrackCount {
            track,
            train: 0,
            calibration: 0,
        })
        .collect();
    let mut sequences = Vec::new();
    for split in [Split::Train, Split::Calibration] {
        let dir = corpus_dir.join(split.dir());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for seq in nominal_corpus(cfg, split)? {
            let entry = SequenceEntry {
                split,
                track: seq.track,
                seed: seq.seed,
                frames: seq.frames.len(),
            };
            for (j, frame) in seq.frames.iter().enumerate() {
                frame.write_pgm(entry.frame_path(&corpus_dir, j))?;
            }
            if let Some(count) = tracks.iter_mut().find(|c| c.track == seq.track) {
                match split {
                    Split::Train => count.train += entry.frames,
                    Split::Calibration => count.calibration += entry.frames,
                }
            }
            sequences.push(entry);
        }
    }
    let shape = cfg.camera.shape;
    let manifest = Manifest {
        seed: cfg.seed,
        channels: shape.channels,
        height: shape.height,
        width: shape.width,
        total_train: tracks.iter().map(|c| c.train).sum(),
        total_calibration: tracks.iter().map(|c| c.calibration).sum(),
        tracks,
        sequences,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&corpus_dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

/// Reads one split of a generated corpus back from disk.
pub fn load_corpus(out: &Path, split: Split) -> Result<Vec<Sequence>> {
    let dir = out.join(CORPUS_DIR);
    let manifest: Manifest = serde_json::from_str(&read_file(&dir.join(MANIFEST_FILE))?)
        .map_err(|e| Error::Parse(format!("corpus manifest: {e}")))?;
    manifest
        .sequences
        .iter()
        .filter(|e| e.split == split)
        .map(|entry| {
            let frames = (0..entry.frames)
                .map(|j| {
                    let path = entry.frame_path(&dir, j);
                    if !path.exists() {
                        return Err(Error::Data(format!("corpus frame {} is missing", path.display())));
                    }
                    Frame::read_pgm(&path)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Sequence {
                track: entry.track,
                seed: entry.seed,
                frames,
            })
        })
        .collect()
}

pub fn init_model(cfg: &ExperimentConfig) -> Result<AutoencoderModel> {
    AutoencoderModel::init(cfg.model.variant, &cfg.layer_dims(), cfg.seed)
}

pub fn train_on(cfg: &ExperimentConfig, corpus: &[Sequence]) -> Result<TrainOutcome> {
    let frames: Vec<Frame> = corpus.iter().flat_map(|t| t.frames.iter().cloned()).collect();
    if frames.is_empty() {
        return Err(Error::Data("training corpus is empty".into()));
    }
    train(&init_model(cfg)?, &frames, &cfg.train_config())
}

/// Trains on the stored corpus and writes the weights and loss history.
pub fn train_command(cfg: &ExperimentConfig, out: &Path) -> Result<TrainOutcome> {
    let corpus = load_corpus(out, Split::Train)?;
    let outcome = train_on(cfg, &corpus)?;
    save_model(&outcome.model, out.join(MODEL_FILE))?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in outcome.loss_history.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, l));
    }
    write_file(&out.join(LOSS_FILE), csv.as_bytes())?;
    Ok(outcome)
}

/// The samples the Gamma fit sees for `corpus` under `score`.
pub fn calibration_samples(
    model: &AutoencoderModel,
    corpus: &[Sequence],
    score: CalibrationScore,
    filter: FilterConfig,
) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for set in corpus {
        let errors = reconstruction_errors(model, &set.frames)?;
        match score {
            CalibrationScore::Raw => samples.extend(errors),
            CalibrationScore::Alarm => samples.extend(alarm_scores(&errors, filter)?),
        }
    }
    Ok(samples)
}

pub fn calibrate_on(cfg: &ExperimentConfig, model: &AutoencoderModel, corpus: &[Sequence]) -> Result<Calibration> {
    let samples = calibration_samples(model, corpus, cfg.calibration.score, cfg.filter)?;
    estimate_threshold(&samples, cfg.calibration.false_alarm_rate, cfg.calibration.mode)
}

/// Calibrates the stored model on the stored calibration split.
pub fn calibrate_command(cfg: &ExperimentConfig, out: &Path) -> Result<Calibration> {
    let model = load_model(out.join(MODEL_FILE)).map_err(missing_as_data)?;
    let corpus = load_corpus(out, Split::Calibration)?;
    let calibration = calibrate_on(cfg, &model, &corpus)?;
    let report = CalibrationReport::from(&calibration);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&out.join(CALIBRATION_FILE), json.as_bytes())?;
    Ok(calibration)
}

fn missing_as_data(e: Error) -> Error {
    match e {
        Error::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            Error::Data(format!("{path} does not exist; run the earlier stages first"))
        }
        other => other,
    }
}

pub fn load_calibration(out: &Path) -> Result<Calibration> {
    let report: CalibrationReport = serde_json::from_str(&read_file(&out.join(CALIBRATION_FILE))?)
        .map_err(|e| Error::Parse(format!("calibration report: {e}")))?;
    report.to_calibration()
}

/// One simulated run: the episode spec index and guard setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunKey {
    pub episode: usize,
    pub guards_enabled: bool,
}

/// Runs every configured episode (twice when paired), in parallel.
pub fn simulate(
    cfg: &ExperimentConfig,
    model: Arc<AutoencoderModel>,
    calibration: &Calibration,
    dump_dir: Option<&Path>,
) -> Result<Vec<(RunKey, EpisodeLog)>> {
    let guard_settings: Vec<bool> = if cfg.simulation.paired {
        vec![false, true]
    } else {
        vec![cfg.simulation.guards_enabled]
    };
    let keys: Vec<RunKey> = (0..cfg.simulation.episodes.len())
        .flat_map(|episode| {
            guard_settings.iter().map(move |&guards_enabled| RunKey {
                episode,
                guards_enabled,
            })
        })
        .collect();
    keys.par_iter()
        .map(|&key| {
            let spec = &cfg.simulation.episodes[key.episode];
            let episode = cfg.episode_config(spec, key.guards_enabled);
            let monitor = Monitor::new(model.clone(), calibration.thresholds, cfg.filter)?;
            let options = RunOptions {
                dump_frames: dump_dir.map(|d| d.join(log_name(spec, key.guards_enabled).replace(".jsonl", ""))),
            };
            Ok((key, run_episode(&episode, monitor, &options)?))
        })
        .collect()
}

pub fn log_name(spec: &EpisodeSpec, guards_enabled: bool) -> String {
    format!(
        "episode_{:05}_{}_{}.jsonl",
        spec.seed,
        spec.track.name(),
        if guards_enabled { "on" } else { "off" }
    )
}

/// Simulates with the stored model and calibration and writes one JSONL log
/// per run to `out/logs/`.
pub fn simulate_command(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    if cfg.simulation.episodes.is_empty() {
        return Err(Error::Config("no episodes configured".into()));
    }
    let model = Arc::new(load_model(out.join(MODEL_FILE)).map_err(missing_as_data)?);
    let calibration = load_calibration(out)?;
    let dump = cfg.simulation.dump_frames.then(|| out.join("frames"));
    let runs = simulate(cfg, model, &calibration, dump.as_deref())?;
    let dir = out.join(LOGS_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut paths = Vec::with_capacity(runs.len());
    for (key, log) in &runs {
        let path = dir.join(log_name(&cfg.simulation.episodes[key.episode], key.guards_enabled));
        log.save(&path)?;
        paths.push(path);
    }
    Ok(paths)
}
