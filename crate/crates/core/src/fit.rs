//! Power-law fits `value ≈ C·t^p` by least squares on `(ln t, ln value)`.

use crate::error::{Result, ScatterError};
use crate::spectral::check_times;

pub const MIN_FIT_SAMPLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    /// `ln C`.
    pub intercept: f64,
    /// RMS of the log-residuals.
    pub residual: f64,
    /// Standard error of the exponent (zero for an exact fit).
    pub stderr: f64,
    pub samples: usize,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl RateFit {
    pub fn predict(&self, t: f64) -> f64 {
        (self.intercept + self.exponent * t.ln()).exp()
    }
}

pub fn fit_rate(series: &[(f64, f64)]) -> Result<RateFit> {
    if series.len() < MIN_FIT_SAMPLES {
        return Err(ScatterError::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            found: series.len(),
        });
    }
    check_times(series.iter().map(|p| p.0))?;
    if let Some((index, &(_, value))) = series
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.1 > 0.0 && p.1.is_finite()))
    {
        return Err(ScatterError::NonPositiveValue { index, value });
    }
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    Ok(RateFit {
        exponent,
        intercept,
        residual: (sse / n).sqrt(),
        stderr: (sse / (n - 2.0) / sxx).sqrt(),
        samples: series.len(),
        t_lo: series[0].0,
        t_hi: series[series.len() - 1].0,
    })
}

/// Fits the samples with `t_lo ≤ t ≤ t_hi`.
pub fn fit_rate_window(series: &[(f64, f64)], t_lo: f64, t_hi: f64) -> Result<RateFit> {
    let tol = 1e-9;
    let window: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t_lo * (1.0 - tol) && t <= t_hi * (1.0 + tol))
        .collect();
    fit_rate(&window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..40)
            .map(|k| {
                let t = 2f64.powf(k as f64 / 4.0);
                (t, f(t))
            })
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_rate(&series(|t| t.powf(-0.5))).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-13);
        assert!(fit.residual < 1e-13);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn constant_series() {
        let fit = fit_rate(&series(|_| 3.0)).unwrap();
        assert!(fit.exponent.abs() < 1e-14);
        assert!((fit.predict(10.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn modulated_power_law() {
        let fit = fit_rate(&series(|t| {
            3.0 * t.powf(-1.25) * (1.0 + 0.01 * t.ln().sin())
        }))
        .unwrap();
        assert!((fit.exponent + 1.25).abs() <= 0.02);
    }

    #[test]
    fn rejects_bad_series() {
        assert!(matches!(
            fit_rate(&series(|_| 1.0)[..3]),
            Err(ScatterError::TooFewSamples { .. })
        ));
        let mut s = series(|t| t);
        s[2].1 = 0.0;
        assert!(matches!(
            fit_rate(&s),
            Err(ScatterError::NonPositiveValue { index: 2, .. })
        ));
        let mut s = series(|t| t);
        s.swap(3, 4);
        assert!(matches!(
            fit_rate(&s),
            Err(ScatterError::NonMonotoneTimes(_))
        ));
    }

    #[test]
    fn window_selects_range() {
        let s = series(|t| if t < 10.0 { 1.0 } else { t.powi(-2) });
        let fit = fit_rate_window(&s, 10.0, 1e6).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12);
        assert!(fit.t_lo >= 10.0);
    }
}
