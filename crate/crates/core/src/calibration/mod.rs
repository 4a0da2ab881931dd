//! Gamma fit of nominal reconstruction errors and the alarm threshold
//! `θ = F⁻¹(1 − false_alarm_rate)` with its guard bands.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use special::{digamma, ln_gamma, regularized_lower_gamma, trigamma};

/// Shape/scale parameterisation: mean `shape · scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma parameters must be positive and finite, got shape {shape}, scale {scale}"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * x.ln() - x / self.scale - self.shape * self.scale.ln() - ln_gamma(self.shape)
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Mle,
    Moments,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub params: GammaParams,
    pub estimator: Estimator,
    pub iterations: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;
const NEWTON_MAX_ITER: usize = 50;

/// Method-of-moments estimate: `shape = mean²/var`, `scale = var/mean`.
pub fn moments_estimate(samples: &[f64]) -> Result<GammaParams> {
    let (mean, var) = mean_variance(samples)?;
    GammaParams::new(mean * mean / var, var / mean)
}

fn mean_variance(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::Calibration(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(x) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::Calibration(format!("sample {x} is not finite and positive")));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) {
        return Err(Error::Calibration("samples have zero variance".into()));
    }
    Ok((mean, var))
}

/// Maximum-likelihood Gamma fit.
///
/// Solves `ln k − ψ(k) = ln(mean) − mean(ln x)` for the shape by Newton's
/// method from the moments estimate; falls back to moments when Newton does
/// not converge within 50 iterations.
pub fn fit_gamma(samples: &[f64]) -> Result<GammaFit> {
    let moments = moments_estimate(samples)?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mean_ln = samples.iter().map(|x| x.ln()).sum::<f64>() / n;
    let target = mean.ln() - mean_ln;

    let fallback = GammaFit {
        params: moments,
        estimator: Estimator::Moments,
        iterations: NEWTON_MAX_ITER,
    };
    if !(target > 0.0 && target.is_finite()) {
        return Ok(fallback);
    }
    let mut k = moments.shape;
    for iter in 1..=NEWTON_MAX_ITER {
        let f = k.ln() - digamma(k) - target;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if !(next > 0.0) {
            next = k / 2.0;
        }
        if !next.is_finite() {
            return Ok(fallback);
        }
        let done = (next - k).abs() <= 1e-12 * k;
        k = next;
        if done {
            return Ok(GammaFit {
                params: GammaParams::new(k, mean / k)?,
                estimator: Estimator::Mle,
                iterations: iter,
            });
        }
    }
    Ok(fallback)
}

/// `P(X ≤ x)` for `X ~ Gamma(params)`.
pub fn gamma_cdf(params: &GammaParams, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("gamma cdf needs x ≥ 0, got {x}")));
    }
    Ok(regularized_lower_gamma(params.shape, x / params.scale))
}

/// The `x` with `gamma_cdf(x) = q`, by bracketing bisection refined with
/// Newton steps.
pub fn gamma_inverse_cdf(params: &GammaParams, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level must be in [0, 1), got {q}")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let cdf = |x: f64| regularized_lower_gamma(params.shape, x / params.scale);
    let mut lo = 0.0;
    let mut hi = params.mean().max(f64::MIN_POSITIVE);
    while cdf(hi) < q {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric(format!("cannot bracket gamma quantile {q}")));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let err = cdf(x) - q;
        if err.abs() <= 1e-15 {
            break;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let density = params.ln_pdf(x).exp();
        let newton = x - err / density;
        x = if density > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMode {
    /// θ at `1 − false_alarm_rate`, bands at the 0.99 and 0.999 quantiles.
    Calibrated,
    /// Fixed absolute bands 0.05 / 0.059 / 0.069.
    Fixed,
}

impl std::str::FromStr for BandMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calibrated" => Ok(BandMode::Calibrated),
            "fixed" => Ok(BandMode::Fixed),
            other => Err(Error::Config(format!("unknown band mode {other:?}"))),
        }
    }
}

pub const FIXED_THETA: f64 = 0.05;
pub const FIXED_BAND1: f64 = 0.059;
pub const FIXED_BAND2: f64 = 0.069;
pub const FIXED_WARN_FLOOR: f64 = 0.055;
pub const CALIBRATED_BAND1_LEVEL: f64 = 0.99;
pub const CALIBRATED_BAND2_LEVEL: f64 = 0.999;

/// Alarm threshold and guard bands.
///
/// Anomalous means `score > theta`; L1 covers `[l1_floor, band1)`, L2
/// `[band1, band2)` and L3 everything from `band2` up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub false_alarm_rate: f64,
    pub theta: f64,
    pub l1_floor: f64,
    pub band1: f64,
    pub band2: f64,
    pub mode: BandMode,
}

impl ThresholdConfig {
    /// Fixed bands with a caller-chosen θ (0.05 reproduces the constants).
    pub fn fixed_bands(theta: f64) -> Self {
        Self {
            false_alarm_rate: 0.05,
            theta,
            l1_floor: FIXED_THETA,
            band1: FIXED_BAND1,
            band2: FIXED_BAND2,
            mode: BandMode::Fixed,
        }
    }

    /// Self-heal/warning split inside L1.
    pub fn warn_floor(&self) -> f64 {
        match self.mode {
            BandMode::Fixed => FIXED_WARN_FLOOR,
            BandMode::Calibrated => 0.5 * (self.theta + self.band1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= self.band1 && self.band1 < self.band2) {
            return Err(Error::Calibration(format!(
                "thresholds must satisfy 0 < theta ≤ band1 < band2, got {} / {} / {}",
                self.theta, self.band1, self.band2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub fit: GammaFit,
    pub thresholds: ThresholdConfig,
    pub n_samples: usize,
}

/// Flat JSON calibration report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub shape: f64,
    pub scale: f64,
    pub estimator: Estimator,
    pub false_alarm_rate: f64,
    pub theta: f64,
    pub band1: f64,
    pub band2: f64,
    pub mode: BandMode,
    pub n_samples: usize,
    pub l1_floor: f64,
}

impl From<&Calibration> for CalibrationReport {
    fn from(c: &Calibration) -> Self {
        Self {
            shape: c.fit.params.shape,
            scale: c.fit.params.scale,
            estimator: c.fit.estimator,
            false_alarm_rate: c.thresholds.false_alarm_rate,
            theta: c.thresholds.theta,
            band1: c.thresholds.band1,
            band2: c.thresholds.band2,
            mode: c.thresholds.mode,
            n_samples: c.n_samples,
            l1_floor: c.thresholds.l1_floor,
        }
    }
}

impl CalibrationReport {
    pub fn to_calibration(&self) -> Result<Calibration> {
        let thresholds = ThresholdConfig {
            false_alarm_rate: self.false_alarm_rate,
            theta: self.theta,
            l1_floor: self.l1_floor,
            band1: self.band1,
            band2: self.band2,
            mode: self.mode,
        };
        thresholds.validate()?;
        Ok(Calibration {
            fit: GammaFit {
                params: GammaParams::new(self.shape, self.scale)?,
                estimator: self.estimator,
                iterations: 0,
            },
            thresholds,
            n_samples: self.n_samples,
        })
    }
}

/// Fits the nominal errors and derives θ and the guard bands.
pub fn estimate_threshold(nominal_errors: &[f64], false_alarm_rate: f64, mode: BandMode) -> Result<Calibration> {
    if !(false_alarm_rate > 0.0 && false_alarm_rate < 1.0) {
        return Err(Error::Domain(format!(
            "false alarm rate must be in (0, 1), got {false_alarm_rate}"
        )));
    }
    let fit = fit_gamma(nominal_errors)?;
    let thresholds = match mode {
        BandMode::Fixed => ThresholdConfig {
            false_alarm_rate,
            ..ThresholdConfig::fixed_bands(FIXED_THETA)
        },
        BandMode::Calibrated => {
            let theta = gamma_inverse_cdf(&fit.params, 1.0 - false_alarm_rate)?;
            let q1 = gamma_inverse_cdf(&fit.params, CALIBRATED_BAND1_LEVEL)?;
            let q2 = gamma_inverse_cdf(&fit.params, CALIBRATED_BAND2_LEVEL)?;
            // a false-alarm rate under 1% would put θ above the 0.99 band
            let band1 = q1.max(theta);
            let band2 = q2.max(band1 * (1.0 + 1e-9));
            ThresholdConfig {
                false_alarm_rate,
                theta,
                l1_floor: theta,
                band1,
                band2,
                mode,
            }
        }
    };
    thresholds.validate()?;
    Ok(Calibration {
        fit,
        thresholds,
        n_samples: nominal_errors.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    fn sample(shape: f64, scale: f64, n: usize, seed: u64) -> Vec<f64> {
        let dist = Gamma::new(shape, scale).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    #[test]
    fn moments_of_mean_6_var_12() {
        // mean 6, sample variance 12 (n − 1 denominator)
        let samples: Vec<f64> = [3.0, 9.0].repeat(5).into_iter().collect();
        let n = samples.len() as f64;
        let var: f64 = samples.iter().map(|x| (x - 6.0) * (x - 6.0)).sum::<f64>() / (n - 1.0);
        let scaled: Vec<f64> = samples
            .iter()
            .map(|x| 6.0 + (x - 6.0) * (12.0 / var).sqrt())
            .collect();
        let p = moments_estimate(&scaled).unwrap();
        assert!((p.shape - 3.0).abs() < 1e-12);
        assert!((p.scale - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_known_parameters() {
        let fit = fit_gamma(&sample(3.0, 2.0, 10_000, 42)).unwrap();
        assert_eq!(fit.estimator, Estimator::Mle);
        assert!((fit.params.shape / 3.0 - 1.0).abs() < 0.05);
        assert!((fit.params.scale / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn fit_rejects_bad_samples() {
        assert!(matches!(fit_gamma(&[1.0; 20]), Err(Error::Calibration(_))));
        assert!(matches!(fit_gamma(&[1.0, 2.0, 3.0]), Err(Error::Calibration(_))));
        let mut s = sample(2.0, 1.0, 20, 1);
        s[3] = 0.0;
        assert!(matches!(fit_gamma(&s), Err(Error::Calibration(_))));
        s[3] = f64::NAN;
        assert!(matches!(fit_gamma(&s), Err(Error::Calibration(_))));
    }

    #[test]
    fn mle_likelihood_dominates_moments() {
        for seed in 0..5 {
            let s = sample(0.7 + seed as f64, 0.01, 500, seed);
            let mle = fit_gamma(&s).unwrap();
            let mom = moments_estimate(&s).unwrap();
            assert!(mle.params.log_likelihood(&s) >= mom.log_likelihood(&s) - 1e-9);
        }
    }

    #[test]
    fn cdf_examples() {
        let unit = GammaParams::new(1.0, 1.0).unwrap();
        assert_eq!(gamma_cdf(&unit, 0.0).unwrap(), 0.0);
        assert!((gamma_cdf(&unit, 1.0).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-12);
        let p = GammaParams::new(3.0, 2.0).unwrap();
        // P(3, 3) = 1 − e^{−3}(1 + 3 + 4.5)
        let exact = 1.0 - (-3f64).exp() * 8.5;
        assert!((gamma_cdf(&p, 6.0).unwrap() - exact).abs() < 1e-12);
        assert!((exact - 0.576810).abs() < 1e-6);
        assert!(matches!(gamma_cdf(&p, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_cdf_examples() {
        let unit = GammaParams::new(1.0, 1.0).unwrap();
        assert_eq!(gamma_inverse_cdf(&unit, 0.0).unwrap(), 0.0);
        assert!((gamma_inverse_cdf(&unit, 0.95).unwrap() - 0.05f64.ln().abs()).abs() < 1e-9);
        let two = GammaParams::new(2.0, 1.0).unwrap();
        let x = gamma_inverse_cdf(&two, 0.5).unwrap();
        assert!((x - 1.678_347).abs() < 1e-6, "{x}");
        assert!(matches!(gamma_inverse_cdf(&unit, 1.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_inverse_cdf(&unit, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn threshold_modes() {
        let s = sample(1.0, 1.0, 20_000, 9);
        let cal = estimate_threshold(&s, 0.05, BandMode::Calibrated).unwrap();
        let scale = cal.fit.params.scale;
        assert!((cal.fit.params.shape - 1.0).abs() < 0.05);
        let t = &cal.thresholds;
        let expected = gamma_inverse_cdf(&cal.fit.params, 0.95).unwrap();
        assert_eq!(t.theta, expected);
        assert!((t.theta / scale - 2.9957).abs() < 0.15);
        assert!(t.theta < t.band1 && t.band1 < t.band2);

        let fixed = estimate_threshold(&s, 0.05, BandMode::Fixed).unwrap();
        let t = fixed.thresholds;
        assert_eq!((t.theta, t.band1, t.band2), (0.05, 0.059, 0.069));
        assert!(estimate_threshold(&s, 0.0, BandMode::Fixed).is_err());
        assert!(estimate_threshold(&s[..5], 0.05, BandMode::Fixed).is_err());
    }

    proptest! {
        #[test]
        fn cdf_is_monotone(shape in 0.2f64..20.0, scale in 0.001f64..10.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let p = GammaParams::new(shape, scale).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(gamma_cdf(&p, lo * scale).unwrap() <= gamma_cdf(&p, hi * scale).unwrap());
        }

        #[test]
        fn inverse_undoes_cdf(shape in 0.3f64..30.0, scale in 0.001f64..10.0, t in 0.0f64..1.0) {
            let p = GammaParams::new(shape, scale).unwrap();
            let x = (0.01 + t * (10.0 * shape * scale - 0.01)).max(0.01);
            let q = gamma_cdf(&p, x).unwrap();
            prop_assume!(q < 1.0 - 1e-8 && q > 1e-8);
            let back = gamma_inverse_cdf(&p, q).unwrap();
            prop_assert!((back - x).abs() <= 1e-6 * x.max(1.0), "x {} back {} q {}", x, back, q);
            prop_assert!((gamma_cdf(&p, back).unwrap() - q).abs() <= 1e-8);
        }
    }
}
