use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{write_file, LOGS_DIR};
use crate::error::{Error, Result};
use crate::evalkit::{
    auc_prc, confusion, pr_curve, prevention_rate, rates, read_counts_csv, ConfusionCounts, Prevention, Rates, Unit,
};
use crate::simworld::EpisodeLog;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PR_CURVE_FILE: &str = "pr_curve.csv";
pub const TRACES_DIR: &str = "traces";

/// Confusion counts and rates under one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub counts: ConfusionCounts,
    pub rates: Rates,
}

impl TableRow {
    pub fn new(label: impl Into<String>, counts: ConfusionCounts) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            counts,
            rates: rates(&counts)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub name: String,
    pub seed: u64,
    pub track: String,
    pub guards_enabled: bool,
    pub n_frames: u64,
    pub anomalous_frames: u64,
    pub violations: usize,
    pub restarts: u32,
    pub disengagements: u32,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub unit: Unit,
    pub episodes: Vec<EpisodeMetrics>,
    /// Per-log rows, then pooled rows per guard setting.
    pub rows: Vec<TableRow>,
    /// Area under the precision-recall curve of the raw error over the
    /// pooled unguarded frames.
    pub auc_prc: Option<f64>,
    /// Share of anomalous frames in the pooled unguarded frames.
    pub prevalence: Option<f64>,
    pub prevention: Option<Prevention>,
}

fn pooled_label(guards_enabled: bool) -> &'static str {
    if guards_enabled {
        "pooled_guards_on"
    } else {
        "pooled_guards_off"
    }
}

/// Metrics over named episode logs. Logs sharing a seed and track with
/// opposite guard settings form prevention pairs.
pub fn evaluate_logs(logs: &[(String, EpisodeLog)], unit: Unit) -> Result<Evaluation> {
    if logs.is_empty() {
        return Err(Error::Data("no episode logs to evaluate".into()));
    }
    let mut episodes = Vec::with_capacity(logs.len());
    let mut rows = Vec::with_capacity(logs.len() + 2);
    for (name, log) in logs {
        let counts = confusion(log, unit)?;
        rows.push(TableRow::new(name.clone(), counts)?);
        episodes.push(EpisodeMetrics {
            name: name.clone(),
            seed: log.header.seed,
            track: log.header.config.track.kind.name().to_string(),
            guards_enabled: log.header.config.guards_enabled,
            n_frames: log.summary.n_frames,
            anomalous_frames: log.frames.iter().filter(|f| f.ground_truth_anomalous).count() as u64,
            violations: log.summary.violations.len(),
            restarts: log.summary.restarts,
            disengagements: log.summary.disengagements,
            counts,
        });
    }
    for guards in [false, true] {
        let pooled: Vec<ConfusionCounts> = episodes
            .iter()
            .filter(|e| e.guards_enabled == guards)
            .map(|e| e.counts)
            .collect();
        if !pooled.is_empty() {
            rows.push(TableRow::new(pooled_label(guards), pooled.into_iter().sum())?);
        }
    }

    let (scores, labels) = unguarded_scores(logs);
    let positives = labels.iter().filter(|&&l| l).count();
    let (auc, prevalence) = if positives > 0 {
        (Some(auc_prc(&scores, &labels)?), Some(positives as f64 / labels.len() as f64))
    } else {
        (None, (!labels.is_empty()).then_some(0.0))
    };

    let pairs: Vec<(EpisodeLog, EpisodeLog)> = logs
        .iter()
        .filter(|(_, off)| !off.header.config.guards_enabled)
        .filter_map(|(_, off)| {
            logs.iter()
                .find(|(_, on)| {
                    on.header.config.guards_enabled
                        && on.header.seed == off.header.seed
                        && on.header.config.track.kind == off.header.config.track.kind
                })
                .map(|(_, on)| (off.clone(), on.clone()))
        })
        .collect();
    let prevention = if pairs.is_empty() {
        None
    } else {
        match prevention_rate(&pairs) {
            Ok(p) => Some(p),
            Err(Error::Data(_)) => None,
            Err(e) => return Err(e),
        }
    };

    Ok(Evaluation {
        unit,
        episodes,
        rows,
        auc_prc: auc,
        prevalence,
        prevention,
    })
}

fn unguarded_scores(logs: &[(String, EpisodeLog)]) -> (Vec<f64>, Vec<bool>) {
    logs.iter()
        .filter(|(_, log)| !log.header.config.guards_enabled)
        .flat_map(|(_, log)| log.frames.iter().map(|f| (f.raw_error, f.ground_truth_anomalous)))
        .unzip()
}

/// Reads every `*.jsonl` log under `dir`, sorted by file name.
pub fn load_logs(dir: &Path) -> Result<Vec<(String, EpisodeLog)>> {
    if !dir.is_dir() {
        return Err(Error::Data(format!("{} is not a directory of episode logs", dir.display())));
    }
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((name, EpisodeLog::load(&p)?))
        })
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn metrics_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("label,tp,fp,tn,fn,tpr,fpr,precision,f1\n");
    for r in rows {
        let c = r.counts;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.label,
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            fmt_opt(r.rates.tpr),
            fmt_opt(r.rates.fpr),
            fmt_opt(r.rates.precision),
            fmt_opt(r.rates.f1)
        ));
    }
    out
}

fn trace_csv(log: &EpisodeLog) -> String {
    let mut out = String::from(
        "frame,intensity,anomalous,raw_error,filtered_error,forecast_max,trigger,level,mode,lateral_offset,speed,violation\n",
    );
    for f in &log.frames {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:?},{},{:?},{},{},{}\n",
            f.frame_index,
            f.intensity,
            f.ground_truth_anomalous as u8,
            f.raw_error,
            f.filtered_error,
            f.forecast_max,
            f.trigger,
            f.level.name(),
            f.mode,
            f.state.lateral_offset,
            f.state.speed,
            f.violation.map(|v| format!("{v:?}")).unwrap_or_default()
        ));
    }
    out
}

/// Reads logs from files and directories of `*.jsonl` files, in order.
pub fn load_log_paths(paths: &[PathBuf]) -> Result<Vec<(String, EpisodeLog)>> {
    let mut logs = Vec::new();
    for p in paths {
        if p.is_dir() {
            logs.extend(load_logs(p)?);
        } else if p.exists() {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            logs.push((name, EpisodeLog::load(p)?));
        } else {
            return Err(Error::Data(format!("{} does not exist", p.display())));
        }
    }
    Ok(logs)
}

/// Evaluates `out/logs/`; see [`evaluate_into`].
pub fn evaluate(out: &Path, unit: Unit) -> Result<Evaluation> {
    evaluate_into(&load_logs(&out.join(LOGS_DIR))?, out, unit)
}

/// Evaluates `logs` and writes the metrics table, the summary, the pooled
/// precision-recall curve and one trace per log into `out`.
pub fn evaluate_into(logs: &[(String, EpisodeLog)], out: &Path, unit: Unit) -> Result<Evaluation> {
    let evaluation = evaluate_logs(logs, unit)?;
    write_file(&out.join(METRICS_FILE), metrics_csv(&evaluation.rows).as_bytes())?;
    let json = serde_json::to_string_pretty(&evaluation).expect("evaluation serializes");
    write_file(&out.join(SUMMARY_FILE), json.as_bytes())?;
    let (scores, labels) = unguarded_scores(logs);
    if evaluation.auc_prc.is_some() {
        let mut csv = String::from("threshold,recall,precision\n");
        for p in pr_curve(&scores, &labels)? {
            csv.push_str(&format!("{},{},{}\n", p.threshold, p.recall, p.precision));
        }
        write_file(&out.join(PR_CURVE_FILE), csv.as_bytes())?;
    }
    for (name, log) in logs {
        write_file(&out.join(TRACES_DIR).join(format!("{name}.csv")), trace_csv(log).as_bytes())?;
    }
    Ok(evaluation)
}

/// Rates for a CSV of labelled confusion counts, written to `out/metrics.csv`.
pub fn evaluate_counts(counts_csv: &Path, out: &Path) -> Result<Vec<TableRow>> {
    let rows = read_counts_csv(counts_csv)?
        .into_iter()
        .map(|r| TableRow::new(r.label.clone(), r.counts()))
        .collect::<Result<Vec<_>>>()?;
    write_file(&out.join(METRICS_FILE), metrics_csv(&rows).as_bytes())?;
    Ok(rows)
}
