//! Fits an autoregressive model to a reconstruction-error stream and shows
//! how the monitor's forecast channel raises an alarm before the error
//! itself crosses the threshold.
//!
//! cargo run --release --example forecast_errors

use laneguard::calibration::ThresholdConfig;
use laneguard::monitor::{ErrorFilter, FilterConfig, Trigger};
use laneguard::timeseries::{fit_ar, forecast};

fn main() -> laneguard::Result<()> {
    let ar1: Vec<f64> = std::iter::successors(Some(1.0), |x| Some(0.8 * x)).take(40).collect();
    let model = fit_ar(&ar1, 1)?;
    println!("AR(1) fit: c={:.6} phi={:.6}", model.intercept, model.coefficients[0]);
    println!("forecast of [.., 4] under phi 0.5: {:?}", forecast(&laneguard::timeseries::ArModel::new(0.0, vec![0.5])?, &[4.0], 2)?);

    // A nominal stretch followed by an error that grows 5% per frame.
    let thresholds = ThresholdConfig::fixed_bands(0.05);
    let mut filter = ErrorFilter::new(FilterConfig::default())?;
    let mut first_forecast = None;
    let mut first_current = None;
    for t in 0..120 {
        let e = if t < 60 {
            0.03 + 0.001 * ((t * 7) % 5) as f64
        } else {
            0.03 * 1.05f64.powi(t - 60)
        };
        let f = filter.push(e)?;
        let trigger = if f.filtered > thresholds.theta {
            Trigger::Current
        } else if f.forecast_max > thresholds.theta {
            Trigger::Forecast
        } else {
            Trigger::None
        };
        if trigger == Trigger::Forecast && first_forecast.is_none() {
            first_forecast = Some((t, e, f.forecast_max));
        }
        if trigger == Trigger::Current && first_current.is_none() {
            first_current = Some((t, e, f.filtered));
        }
    }
    if let Some((t, e, f)) = first_forecast {
        println!("forecast alarm at frame {t}: error {e:.4}, forecast max {f:.4}");
    }
    if let Some((t, e, f)) = first_current {
        println!("current alarm at frame {t}: error {e:.4}, filtered {f:.4}");
    }
    Ok(())
}
