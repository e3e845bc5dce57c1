//! Log-linear growth fits and late-time saturation statistics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::OtocSeries;
use crate::error::{OtocError, Result};
use crate::scalar::Scalar;

pub const MIN_FIT_SAMPLES: usize = 10;
pub const MIN_TAIL_SAMPLES: usize = 50;
pub const ENVELOPE_WINDOW: usize = 5;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow<S = f64> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> FitWindow<S> {
    pub fn new(lo: S, hi: S) -> Result<Self> {
        if !(lo < hi) {
            return Err(OtocError::InvalidParameter(format!("fit window needs lo < hi, got {lo}:{hi}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn shifted(&self, by: S) -> Self {
        Self { lo: self.lo + by, hi: self.hi + by }
    }
}

impl Default for FitWindow<f64> {
    fn default() -> Self {
        Self { lo: 20.0, hi: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<S = f64> {
    pub window: FitWindow<S>,
    /// Growth rate of `ln C`, i.e. `2 lambda`.
    pub slope: S,
    pub intercept: S,
    pub rms_residual: S,
    pub samples: usize,
    pub envelope: bool,
}

/// Ordinary least squares of `ln C(t)` against `t` over the samples inside `window`.
pub fn lyapunov_fit<S: Scalar>(series: &OtocSeries<S>, window: FitWindow<S>) -> Result<FitReport<S>> {
    fit_values(series, &series.values, window, false)
}

/// Same fit on the centred rolling maximum of the series.
pub fn lyapunov_fit_envelope<S: Scalar>(
    series: &OtocSeries<S>,
    window: FitWindow<S>,
) -> Result<FitReport<S>> {
    let env = rolling_max(&series.values, ENVELOPE_WINDOW);
    fit_values(series, &env, window, true)
}

/// Centred rolling maximum; the window shrinks at the edges.
pub fn rolling_max<S: Scalar>(values: &[S], width: usize) -> Vec<S> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().fold(S::neg_infinity(), |a, &b| a.max(b))
        })
        .collect()
}

fn fit_values<S: Scalar>(
    series: &OtocSeries<S>,
    values: &[S],
    window: FitWindow<S>,
    envelope: bool,
) -> Result<FitReport<S>> {
    let window = FitWindow::new(window.lo, window.hi)?;
    // a sliver of slack so grid points landing on the edges are kept
    let slack = series.grid.dt * S::lit(1e-9);
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        let t = series.grid.t(i);
        if t < window.lo - slack || t > window.hi + slack {
            continue;
        }
        if !(v > S::zero()) {
            return Err(OtocError::NonPositiveValue { t: t.to_f64_lossy(), value: v.to_f64_lossy() });
        }
        ts.push(t);
        ys.push(v.ln());
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(OtocError::SeriesTooShort {
            what: format!("{} samples in fit window, need {MIN_FIT_SAMPLES}", ts.len()),
        });
    }
    let n = S::from_usize_lossy(ts.len());
    let mean_t = ts.iter().fold(S::zero(), |a, &b| a + b) / n;
    let mean_y = ys.iter().fold(S::zero(), |a, &b| a + b) / n;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    for (&t, &y) in ts.iter().zip(&ys) {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let sse = ts.iter().zip(&ys).fold(S::zero(), |a, (&t, &y)| {
        let r = y - intercept - slope * t;
        a + r * r
    });
    Ok(FitReport {
        window,
        slope,
        intercept,
        rms_residual: (sse / n).sqrt(),
        samples: ts.len(),
        envelope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport<S = f64> {
    pub tail_fraction: S,
    pub last_window: (S, S),
    pub previous_window: (S, S),
    pub tail_mean: S,
    pub tail_std: S,
    pub previous_mean: S,
    /// `|mean(last) - mean(previous)| / mean(last)`.
    pub drift: S,
    pub reference: Option<S>,
}

impl<S: Scalar> SaturationReport<S> {
    pub fn with_reference(mut self, reference: S) -> Self {
        self.reference = Some(reference);
        self
    }
}

fn mean_std<S: Scalar>(v: &[S]) -> (S, S) {
    let n = S::from_usize_lossy(v.len());
    let mean = v.iter().fold(S::zero(), |a, &b| a + b) / n;
    let var = v.iter().fold(S::zero(), |a, &b| a + (b - mean) * (b - mean)) / n;
    (mean, var.sqrt())
}

/// Statistics over the last `tail_fraction` of the samples and the window of
/// equal length before it.
pub fn saturation_stats<S: Scalar>(series: &OtocSeries<S>, tail_fraction: S) -> Result<SaturationReport<S>> {
    if !(tail_fraction > S::zero() && tail_fraction <= S::lit(0.5)) {
        return Err(OtocError::InvalidParameter(format!(
            "tail fraction must lie in (0, 0.5], got {tail_fraction}"
        )));
    }
    let len = series.values.len();
    let width = (S::from_usize_lossy(len) * tail_fraction).floor().to_usize().unwrap_or(0);
    if width < MIN_TAIL_SAMPLES {
        return Err(OtocError::SeriesTooShort {
            what: format!("tail window of {width} samples, need {MIN_TAIL_SAMPLES}"),
        });
    }
    let last = &series.values[len - width..];
    let prev = &series.values[len - 2 * width..len - width];
    let (tail_mean, tail_std) = mean_std(last);
    let (previous_mean, _) = mean_std(prev);
    let g = &series.grid;
    Ok(SaturationReport {
        tail_fraction,
        last_window: (g.t(len - width), g.t(len - 1)),
        previous_window: (g.t(len - 2 * width), g.t(len - width - 1)),
        tail_mean,
        tail_std,
        previous_mean,
        drift: (tail_mean - previous_mean).abs() / tail_mean.abs(),
        reference: None,
    })
}

/// `|ln(tail mean) - ln(reference)|`.
pub fn saturation_vs_reference<S: Scalar>(report: &SaturationReport<S>) -> Result<S> {
    let reference = report
        .reference
        .ok_or_else(|| OtocError::InvalidParameter("saturation report has no reference value".into()))?;
    if !(reference > S::zero() && report.tail_mean > S::zero()) {
        return Err(OtocError::InvalidParameter(format!(
            "log gap needs positive values (tail mean {}, reference {reference})",
            report.tail_mean
        )));
    }
    Ok((report.tail_mean.ln() - reference.ln()).abs())
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn sci<S: Scalar>(v: S) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

impl<S: Scalar> FitReport<S> {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        kv(&mut out, "window_lo", sci(self.window.lo));
        kv(&mut out, "window_hi", sci(self.window.hi));
        kv(&mut out, "slope", sci(self.slope));
        kv(&mut out, "intercept", sci(self.intercept));
        kv(&mut out, "rms_residual", sci(self.rms_residual));
        kv(&mut out, "samples", self.samples);
        kv(&mut out, "envelope", self.envelope);
        out
    }
}

impl<S: Scalar> SaturationReport<S> {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        kv(&mut out, "tail_fraction", sci(self.tail_fraction));
        kv(&mut out, "tail_window", format!("{}:{}", sci(self.last_window.0), sci(self.last_window.1)));
        kv(&mut out, "tail_mean", sci(self.tail_mean));
        kv(&mut out, "tail_std", sci(self.tail_std));
        kv(&mut out, "previous_mean", sci(self.previous_mean));
        kv(&mut out, "drift", sci(self.drift));
        if let Some(r) = self.reference {
            kv(&mut out, "reference", sci(r));
            if let Ok(gap) = saturation_vs_reference(self) {
                kv(&mut out, "log_gap", sci(gap));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::TimeGrid;
    use approx::assert_relative_eq;

    fn series(t_max: f64, dt: f64, f: impl Fn(f64) -> f64) -> OtocSeries {
        let grid = TimeGrid::new(t_max, dt).unwrap();
        let values = grid.times().into_iter().map(f).collect();
        OtocSeries::external(grid, values)
    }

    #[test]
    fn exact_exponential() {
        let s = series(60.0, 0.1, |t| (2.0 * t).exp());
        let fit = lyapunov_fit(&s, FitWindow::new(20.0, 50.0).unwrap()).unwrap();
        assert_relative_eq!(fit.slope, 2.0, epsilon = 1e-10);
        assert!(fit.rms_residual < 1e-10);
        assert_eq!(fit.samples, 301);
    }

    #[test]
    fn periodic_series_has_no_trend() {
        let p = std::f64::consts::PI;
        let s = series(p, p / 200.0, |t| t.cos().powi(2) + 1.0);
        let fit = lyapunov_fit(&s, FitWindow::new(0.0, p).unwrap()).unwrap();
        assert!(fit.slope.abs() < 1e-10, "{}", fit.slope);
    }

    #[test]
    fn non_positive_value_is_named() {
        let s = series(60.0, 1.0, |t| if t == 30.0 { 0.0 } else { 1.0 });
        assert_eq!(
            lyapunov_fit(&s, FitWindow::default()),
            Err(OtocError::NonPositiveValue { t: 30.0, value: 0.0 })
        );
    }

    #[test]
    fn too_few_samples() {
        let s = series(60.0, 5.0, |_| 1.0);
        assert!(matches!(
            lyapunov_fit(&s, FitWindow::default()),
            Err(OtocError::SeriesTooShort { .. })
        ));
        assert!(FitWindow::new(5.0, 5.0).is_err());
    }

    #[test]
    fn envelope_bridges_zeros() {
        let s = series(60.0, 0.1, |t| (0.1 * t).exp() * t.cos().powi(2));
        let plain = lyapunov_fit(&s, FitWindow::default());
        let env = lyapunov_fit_envelope(&s, FitWindow::default());
        assert!(plain.is_err() || env.is_ok());
        assert_eq!(rolling_max(&[1.0, 3.0, 2.0, 0.0, 0.0, 0.0, 5.0], 5), vec![3.0, 3.0, 3.0, 3.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn constant_saturation() {
        let s = series(100.0, 0.1, |_| 2.5);
        let r = saturation_stats(&s, 0.25).unwrap();
        assert_eq!(r.tail_mean, 2.5);
        assert_eq!(r.tail_std, 0.0);
        assert_eq!(r.drift, 0.0);
        let r = r.with_reference(2.5);
        assert_eq!(saturation_vs_reference(&r).unwrap(), 0.0);
    }

    #[test]
    fn cosine_squared_saturation() {
        let s = series(200.0, 0.1, |t| t.cos().powi(2));
        let r = saturation_stats(&s, 0.25).unwrap();
        assert!((r.tail_mean - 0.5).abs() < 0.01);
        assert!(r.drift < 0.02);
    }

    #[test]
    fn saturation_needs_samples() {
        let s = series(10.0, 0.1, |_| 1.0);
        assert!(saturation_stats(&s, 0.25).is_err());
        let s = series(100.0, 0.1, |_| 1.0);
        assert!(saturation_vs_reference(&saturation_stats(&s, 0.25).unwrap()).is_err());
    }

    #[test]
    fn key_value_lines() {
        let s = series(60.0, 0.1, |t| (0.5 * t).exp());
        let text = lyapunov_fit(&s, FitWindow::default()).unwrap().to_key_value();
        assert!(text.lines().any(|l| l.starts_with("slope=") && l.contains("e-1")));
        assert_eq!(text.lines().count(), 7);
    }
}
