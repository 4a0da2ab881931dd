//! Autoregressive model of the error stream: least-squares fit over a window
//! and iterated multi-step forecasts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ridge strength on the lag coefficients (the intercept is not penalised).
pub const RIDGE: f64 = 1e-6;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_FIT_WINDOW: usize = 30;
pub const DEFAULT_HORIZON: usize = 6;

/// `x_t = c + φ₁x_{t−1} + … + φ_m x_{t−m} + E_t`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Length of the series the model was fitted on.
    pub fit_window: usize,
}

impl ArModel {
    pub fn new(intercept: f64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Config("AR order must be at least 1".into()));
        }
        if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("AR parameters must be finite".into()));
        }
        let fit_window = 2 * coefficients.len() + 1;
        Ok(Self {
            intercept,
            coefficients,
            fit_window,
        })
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// One-step prediction from `lags`, most recent value last.
    fn predict(&self, lags: &[f64]) -> f64 {
        let m = self.order();
        let mut y = self.intercept;
        for (k, phi) in self.coefficients.iter().enumerate() {
            y += phi * lags[lags.len() - 1 - k];
        }
        debug_assert!(lags.len() >= m);
        y
    }

    /// Mean squared one-step residual over every predictable point of `series`.
    pub fn mean_squared_residual(&self, series: &[f64]) -> f64 {
        let m = self.order();
        let n = series.len().saturating_sub(m);
        if n == 0 {
            return 0.0;
        }
        (m..series.len())
            .map(|t| {
                let r = series[t] - self.predict(&series[t - m..t]);
                r * r
            })
            .sum::<f64>()
            / n as f64
    }
}

/// Ridge-regularised least squares of `x_t` on `(1, x_{t−1}, …, x_{t−m})`,
/// solved through the normal equations by Cholesky factorisation.
pub fn fit_ar(series: &[f64], order: usize) -> Result<ArModel> {
    if order == 0 {
        return Err(Error::Config("AR order must be at least 1".into()));
    }
    if series.len() < 2 * order + 1 {
        return Err(Error::Data(format!(
            "AR({order}) needs at least {} points, got {}",
            2 * order + 1,
            series.len()
        )));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data("AR series contains non-finite values".into()));
    }
    let p = order + 1;
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut row = vec![0.0; p];
    for t in order..series.len() {
        row[0] = 1.0;
        for k in 1..=order {
            row[k] = series[t - k];
        }
        for i in 0..p {
            rhs[i] += row[i] * series[t];
            for j in 0..=i {
                gram[i * p + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }
    for k in 1..p {
        gram[k * p + k] += RIDGE;
    }
    let beta = cholesky_solve(&mut gram, &rhs, p)?;
    let mut model = ArModel::new(beta[0], beta[1..].to_vec())?;
    model.fit_window = series.len();
    Ok(model)
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `n×n`),
/// overwriting `A` with its lower Cholesky factor.
fn cholesky_solve(a: &mut [f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return Err(Error::Numeric("normal equations are not positive definite".into()));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * y[k];
        }
        y[i] = s / a[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= a[k * n + i] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    Ok(x)
}

/// Iterates the model with zero noise, feeding each prediction back in.
pub fn forecast(model: &ArModel, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let m = model.order();
    if history.len() < m {
        return Err(Error::Data(format!(
            "forecast needs {m} history points, got {}",
            history.len()
        )));
    }
    let mut buf = history[history.len() - m..].to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = model.predict(&buf[buf.len() - m..]);
        out.push(next);
        buf.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn constant_series_is_reproduced() {
        let model = fit_ar(&[0.3; 50], 2).unwrap();
        for h in [1, 5, 40] {
            for f in forecast(&model, &[0.3; 50], h).unwrap() {
                assert!((f - 0.3).abs() < 1e-6, "{f}");
            }
        }
    }

    #[test]
    fn recovers_noiseless_ar1() {
        let series: Vec<f64> = (0..50).map(|t| 0.8f64.powi(t)).collect();
        let model = fit_ar(&series, 1).unwrap();
        assert!((model.coefficients[0] - 0.8).abs() < 1e-6);
        assert!(model.intercept.abs() < 1e-6);
    }

    #[test]
    fn recovers_noisy_ar2() {
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = vec![0.0, 0.0];
        for t in 2..500 {
            let next = 0.5 * x[t - 1] - 0.3 * x[t - 2] + noise.sample(&mut rng);
            x.push(next);
        }
        let model = fit_ar(&x, 2).unwrap();
        assert!((model.coefficients[0] - 0.5).abs() < 0.05, "{model:?}");
        assert!((model.coefficients[1] + 0.3).abs() < 0.05, "{model:?}");
    }

    #[test]
    fn hand_iterated_forecasts() {
        let model = ArModel::new(0.0, vec![0.5]).unwrap();
        assert_eq!(forecast(&model, &[9.0, 4.0], 2).unwrap(), vec![2.0, 1.0]);
        let flat = ArModel::new(0.3, vec![0.0, 0.0]).unwrap();
        assert_eq!(forecast(&flat, &[1.0, 2.0], 3).unwrap(), vec![0.3; 3]);
        assert!(forecast(&model, &[1.0], 0).unwrap().is_empty());
        assert!(matches!(forecast(&flat, &[1.0], 1), Err(Error::Data(_))));
    }

    #[test]
    fn invalid_series() {
        assert!(matches!(fit_ar(&[1.0; 6], 3), Err(Error::Data(_))));
        let mut s = vec![0.1; 20];
        s[4] = f64::NAN;
        assert!(matches!(fit_ar(&s, 3), Err(Error::Data(_))));
    }

    #[test]
    fn refit_is_bit_identical() {
        let s: Vec<f64> = (0..30).map(|t| ((t * 7 % 11) as f64).sin()).collect();
        assert_eq!(fit_ar(&s, 3).unwrap(), fit_ar(&s, 3).unwrap());
    }

    proptest! {
        #[test]
        fn forecast_is_linear_in_scale(
            coeffs in prop::collection::vec(-0.9f64..0.9, 1..4),
            c in -1.0f64..1.0,
            history in prop::collection::vec(-2.0f64..2.0, 4..10),
            alpha in 0.1f64..10.0,
        ) {
            let base = ArModel::new(c, coeffs.clone()).unwrap();
            let scaled = ArModel::new(alpha * c, coeffs).unwrap();
            let h: Vec<f64> = history.iter().map(|x| alpha * x).collect();
            let a = forecast(&base, &history, 5).unwrap();
            let b = forecast(&scaled, &h, 5).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((alpha * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn ridge_fit_beats_intercept_only(series in prop::collection::vec(0.0f64..1.0, 30)) {
            let model = fit_ar(&series, 3).unwrap();
            let tail = &series[3..];
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let baseline = ArModel::new(mean, vec![0.0; 3]).unwrap();
            prop_assert!(
                model.mean_squared_residual(&series) <= baseline.mean_squared_residual(&series) + 1e-12
            );
        }
    }
}
