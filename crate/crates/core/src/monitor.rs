//! Streaming anomaly monitor: reconstruction error per frame, AR filtering and
//! forecasting of the error stream, and the threshold verdict.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{mean_squared_difference, AutoencoderModel};
use crate::calibration::ThresholdConfig;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::guard::{classify_level, GuardLevel};
use crate::timeseries::{self, fit_ar, forecast};

/// Mean per-pixel squared difference between a frame and its reconstruction.
pub fn recon_error(x: &Frame, reconstruction: &Frame) -> Result<f64> {
    if x.shape() != reconstruction.shape() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: reconstruction.len(),
        });
    }
    mean_squared_difference(x.pixels(), reconstruction.pixels())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    #[default]
    None,
    Current,
    Forecast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    pub frame_index: u64,
    pub raw_error: f64,
    pub filtered_error: f64,
    pub forecast_max: f64,
    pub anomalous: bool,
    pub trigger: Trigger,
    pub level: GuardLevel,
}

impl MonitorVerdict {
    /// The error the level was derived from: `ê` for current triggers and
    /// otherwise the larger of `ê` and the forecast maximum.
    pub fn score(&self) -> f64 {
        match self.trigger {
            Trigger::Current => self.filtered_error,
            _ => self.filtered_error.max(self.forecast_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub ar_order: usize,
    pub fit_window: usize,
    pub horizon: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            ar_order: timeseries::DEFAULT_ORDER,
            fit_window: timeseries::DEFAULT_FIT_WINDOW,
            horizon: timeseries::DEFAULT_HORIZON,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ar_order == 0 || self.fit_window < 2 * self.ar_order + 1 {
            return Err(Error::Config(format!(
                "AR order {} needs a fit window of at least {}, got {}",
                self.ar_order,
                2 * self.ar_order + 1,
                self.fit_window
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("forecast horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// AR filter over the error stream, independent of any model.
#[derive(Debug, Clone)]
pub struct ErrorFilter {
    config: FilterConfig,
    history: VecDeque<f64>,
    /// One-step forecast for the next frame, once the window has filled.
    next_estimate: Option<f64>,
}

/// Output of [`ErrorFilter::push`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filtered {
    pub filtered: f64,
    pub forecast_max: f64,
}

impl ErrorFilter {
    pub fn new(config: FilterConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            history: VecDeque::with_capacity(config.fit_window + 1),
            next_estimate: None,
        })
    }

    pub fn config(&self) -> FilterConfig {
        self.config
    }

    /// Filters `e`, then refits on the window ending at `e` for the
    /// next frame and the forecast horizon.
    pub fn push(&mut self, e: f64) -> Result<Filtered> {
        if !e.is_finite() {
            return Err(Error::Numeric(format!("non-finite reconstruction error {e}")));
        }
        let filtered = self.next_estimate.unwrap_or(e);
        self.history.push_back(e);
        if self.history.len() > self.config.fit_window {
            self.history.pop_front();
        }
        let mut forecast_max = 0.0;
        if self.history.len() == self.config.fit_window {
            let window = self.history.make_contiguous();
            let model = fit_ar(window, self.config.ar_order)?;
            let path = forecast(&model, window, self.config.horizon)?;
            forecast_max = path.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            self.next_estimate = Some(path[0]);
        }
        Ok(Filtered {
            filtered,
            forecast_max,
        })
    }

    pub fn reset(&mut self) {
        self.history.clear();
        self.next_estimate = None;
    }
}

/// Per-episode monitor state: the model, thresholds and the error filter.
#[derive(Debug, Clone)]
pub struct Monitor {
    model: Arc<AutoencoderModel>,
    thresholds: ThresholdConfig,
    filter: ErrorFilter,
    frame_index: u64,
}

impl Monitor {
    pub fn new(model: Arc<AutoencoderModel>, thresholds: ThresholdConfig, filter: FilterConfig) -> Result<Self> {
        thresholds.validate()?;
        Ok(Self {
            model,
            thresholds,
            filter: ErrorFilter::new(filter)?,
            frame_index: 0,
        })
    }

    pub fn thresholds(&self) -> &ThresholdConfig {
        &self.thresholds
    }

    pub fn model(&self) -> &AutoencoderModel {
        &self.model
    }

    pub fn filter_config(&self) -> FilterConfig {
        self.filter.config()
    }

    /// Reconstructs `frame` and feeds its error through [`Self::observe_error`].
    pub fn step(&mut self, frame: &Frame) -> Result<MonitorVerdict> {
        if frame.len() != self.model.input_dim() {
            return Err(Error::Dimension {
                expected: self.model.input_dim(),
                actual: frame.len(),
            });
        }
        let reconstruction = self.model.forward(frame)?;
        let e = recon_error(frame, &reconstruction)?;
        self.observe_error(e)
    }

    /// Verdict for a precomputed reconstruction error.
    pub fn observe_error(&mut self, e: f64) -> Result<MonitorVerdict> {
        let Filtered {
            filtered,
            forecast_max,
        } = self.filter.push(e)?;
        let theta = self.thresholds.theta;
        let (trigger, level) = if filtered > theta {
            (Trigger::Current, classify_level(filtered, &self.thresholds)?)
        } else if forecast_max > theta {
            (Trigger::Forecast, classify_level(forecast_max, &self.thresholds)?)
        } else {
            (Trigger::None, GuardLevel::None)
        };
        let verdict = MonitorVerdict {
            frame_index: self.frame_index,
            raw_error: e,
            filtered_error: filtered,
            forecast_max,
            anomalous: trigger != Trigger::None,
            trigger,
            level,
        };
        self.frame_index += 1;
        Ok(verdict)
    }
}

/// The per-frame alarm score `max(ê, forecast_max)` of an error stream, with
/// the warm-up frames (before the first fit) dropped.
pub fn alarm_scores(errors: &[f64], config: FilterConfig) -> Result<Vec<f64>> {
    let mut filter = ErrorFilter::new(config)?;
    let mut out = Vec::with_capacity(errors.len());
    for (i, &e) in errors.iter().enumerate() {
        let f = filter.push(e)?;
        if i + 1 >= config.fit_window {
            out.push(f.filtered.max(f.forecast_max));
        }
    }
    Ok(out)
}
