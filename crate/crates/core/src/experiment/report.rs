use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::evaluate::{load_logs, PR_CURVE_FILE};
use super::{load_calibration, write_file, LOGS_DIR, LOSS_FILE};
use crate::error::{Error, Result};

pub const PLOTS_DIR: &str = "plots";

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

/// One polyline of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// A standalone SVG line chart with optional labelled horizontal rules.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], rules: &[(String, f64)]) -> String {
    let (x0, x1) = extent(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = extent(
        series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(rules.iter().map(|r| r.1)),
    );
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(svg, r#"<text x="{}" y="{y:.1}" text-anchor="end">{v:.4}</text>"#, MARGIN - 4.0);
    }
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{v:.4}</text>"#, HEIGHT - MARGIN + 14.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="12" y="{}" text-anchor="middle" transform="rotate(-90 12 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (name, y) in rules {
        let y = sy(*y);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" x2="{}" y1="{y:.1}" y2="{y:.1}" stroke="#555" stroke-dasharray="4 3"/><text x="{}" y="{:.1}" text-anchor="end" fill="#555">{}</text>"##,
            MARGIN,
            WIDTH - MARGIN,
            WIDTH - MARGIN,
            y - 3.0,
            escape(name)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.2"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (i as f64 + 1.0),
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn read_xy_csv(path: &Path, x_col: usize, y_col: usize) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let parse = |i: usize| {
                r.get(i)
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("{}: bad value in column {i}", path.display())))
            };
            Ok((parse(x_col)?, parse(y_col)?))
        })
        .collect()
}

/// Renders every plot the artifacts in `out` allow: the training loss, the
/// precision-recall curve, and one error trace per episode log with the
/// calibrated threshold and bands. Returns the written files.
pub fn report(out: &Path) -> Result<Vec<PathBuf>> {
    let dir = out.join(PLOTS_DIR);
    let mut written = Vec::new();
    let mut emit = |name: &str, svg: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, svg.as_bytes())?;
        written.push(path);
        Ok(())
    };

    let loss = out.join(LOSS_FILE);
    if loss.exists() {
        let points = read_xy_csv(&loss, 0, 1)?;
        emit(
            "loss.svg",
            line_chart_svg("Training loss", "epoch", "mean squared error", &[Series::new("loss", points)], &[]),
        )?;
    }
    let pr = out.join(PR_CURVE_FILE);
    if pr.exists() {
        let points = read_xy_csv(&pr, 1, 2)?;
        emit(
            "pr_curve.svg",
            line_chart_svg("Precision-recall", "recall", "precision", &[Series::new("raw error", points)], &[]),
        )?;
    }
    let logs_dir = out.join(LOGS_DIR);
    if logs_dir.is_dir() && fs::read_dir(&logs_dir).map_err(|e| Error::io(&logs_dir, e))?.next().is_some() {
        let rules: Vec<(String, f64)> = match load_calibration(out) {
            Ok(c) => vec![
                ("theta".to_string(), c.thresholds.theta),
                ("band 1".to_string(), c.thresholds.band1),
                ("band 2".to_string(), c.thresholds.band2),
            ],
            Err(_) => Vec::new(),
        };
        for (name, log) in load_logs(&logs_dir)? {
            let pick = |f: fn(&crate::simworld::FrameRecord) -> f64| -> Vec<(f64, f64)> {
                log.frames.iter().map(|r| (r.frame_index as f64, f(r))).collect()
            };
            let series = [
                Series::new("raw error", pick(|r| r.raw_error)),
                Series::new("filtered", pick(|r| r.filtered_error)),
                Series::new("forecast max", pick(|r| r.forecast_max)),
            ];
            emit(
                &format!("{name}.svg"),
                line_chart_svg(&name, "frame", "reconstruction error", &series, &rules),
            )?;
        }
    }
    if written.is_empty() {
        return Err(Error::Data(format!("{} holds nothing to plot", out.display())));
    }
    Ok(written)
}
