//! Detection and prevention metrics over episode logs: confusion counts,
//! TPR/FPR/precision/F1, the area under the precision-recall curve, and the
//! paired prevention rate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::Trigger;
use crate::simworld::EpisodeLog;

/// Frames before (and including) a violation searched for a trigger.
pub const ATTRIBUTION_FRAMES: u64 = 12;
/// Half-width of the neighbourhood matching a guarded-run violation to an
/// unguarded one.
pub const PAIRING_FRAMES: u64 = 24;
pub const DEFAULT_WINDOW: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.fp + o.fp, self.tn + o.tn, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Frame,
    Window(usize),
}

/// Counts per frame, or per consecutive block of frames where a block is
/// truly anomalous if any frame is and predicted anomalous if any frame
/// triggers. A trailing partial block counts as a block.
pub fn confusion_from_flags(truth: &[bool], predicted: &[bool], unit: Unit) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Data("no frames to count".into()));
    }
    let len = match unit {
        Unit::Frame => 1,
        Unit::Window(0) => return Err(Error::Config("window length must be at least 1".into())),
        Unit::Window(n) => n,
    };
    let mut counts = ConfusionCounts::default();
    for (t, p) in truth.chunks(len).zip(predicted.chunks(len)) {
        counts.add(t.iter().any(|&x| x), p.iter().any(|&x| x));
    }
    Ok(counts)
}

pub fn confusion(log: &EpisodeLog, unit: Unit) -> Result<ConfusionCounts> {
    let truth: Vec<bool> = log.frames.iter().map(|f| f.ground_truth_anomalous).collect();
    let predicted: Vec<bool> = log.frames.iter().map(|f| f.trigger != Trigger::None).collect();
    confusion_from_flags(&truth, &predicted, unit)
}

/// Rates with `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn rates(counts: &ConfusionCounts) -> Result<Rates> {
    let c = counts;
    if c.total() == 0 {
        return Err(Error::Data("confusion counts are all zero".into()));
    }
    let tpr = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f1 = match (precision, tpr) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Rates {
        tpr,
        fpr: ratio(c.fp, c.fp + c.tn),
        precision,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Precision-recall points for every distinct score used as a threshold
/// (score ≥ threshold is positive), highest threshold first. Thresholds that
/// admit no true positive are skipped.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<PrPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Numeric(format!("score {s} is not a number")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::Data("precision-recall needs at least one positive label".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if tp > 0 {
            points.push(PrPoint {
                threshold,
                recall: tp as f64 / positives as f64,
                precision: tp as f64 / (tp + fp) as f64,
            });
        }
    }
    Ok(points)
}

/// Trapezoidal area under the precision-recall curve, anchored at recall 0
/// with the precision of the highest threshold.
pub fn auc_prc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let points = pr_curve(scores, labels)?;
    let first = points[0];
    let mut area = 0.0;
    let (mut r0, mut p0) = (0.0, first.precision);
    for p in &points {
        area += (p.recall - r0) * (p.precision + p0) / 2.0;
        r0 = p.recall;
        p0 = p.precision;
    }
    Ok(area.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prevention {
    /// Unguarded violations with a trigger in the attribution window.
    pub predicted_off: u64,
    /// Guarded violations near a predicted unguarded one.
    pub remaining_on: u64,
    pub rate: f64,
}

/// Violations of `off` that the monitor predicted: a trigger within the
/// `ATTRIBUTION_FRAMES` frames up to and including the violation frame.
pub fn predicted_violations(off: &EpisodeLog) -> Vec<u64> {
    off.violations()
        .iter()
        .map(|v| v.frame_index)
        .filter(|&f| {
            let lo = f.saturating_sub(ATTRIBUTION_FRAMES);
            off.frames
                .iter()
                .filter(|r| r.frame_index >= lo && r.frame_index <= f)
                .any(|r| r.trigger != Trigger::None)
        })
        .collect()
}

/// `(V_off − V_on) / V_off`, floored at zero, over guards-off/guards-on
/// pairs of otherwise identical episodes.
pub fn prevention_rate(pairs: &[(EpisodeLog, EpisodeLog)]) -> Result<Prevention> {
    let (mut v_off, mut v_on) = (0u64, 0u64);
    for (off, on) in pairs {
        if off.header.seed != on.header.seed || off.header.config.guards_enabled || !on.header.config.guards_enabled {
            return Err(Error::Data(
                "prevention pairs need a guards-off and a guards-on run of the same seed".into(),
            ));
        }
        let predicted = predicted_violations(off);
        v_off += predicted.len() as u64;
        v_on += on
            .violations()
            .iter()
            .filter(|v| predicted.iter().any(|&f| f.abs_diff(v.frame_index) <= PAIRING_FRAMES))
            .count() as u64;
    }
    if v_off == 0 {
        return Err(Error::Data("no predicted violations in the unguarded runs".into()));
    }
    let rate = ((v_off as f64 - v_on as f64) / v_off as f64).max(0.0);
    Ok(Prevention {
        predicted_off: v_off,
        remaining_on: v_on,
        rate,
    })
}

/// One labelled row of raw confusion counts, as in a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRow {
    pub label: String,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl CountsRow {
    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts::new(self.tp, self.fp, self.tn, self.fn_)
    }
}

/// Reads a CSV with header `label,tp,fp,tn,fn`.
pub fn read_counts_csv(path: impl AsRef<Path>) -> Result<Vec<CountsRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::Parse(format!("{}: {e}", path.display()))))
        .collect()
}
