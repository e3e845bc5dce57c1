use serde::{Deserialize, Serialize};

use crate::error::{OtocError, Result};
use crate::scalar::Scalar;

use super::{
    weighted_otoc, OtocSeries, Provenance, SeriesKind, Spectrum, TimeGrid, TransitionTable,
    ValidityWarning, B_BAND_WIDTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams<S = f64> {
    pub temperature: S,
    pub weight_cutoff: S,
    pub n_max: usize,
    pub enhancement_warn_threshold: S,
}

impl<S: Scalar> ThermalParams<S> {
    pub const DEFAULT_CUTOFF: f64 = 1e-10;
    pub const DEFAULT_N_MAX: usize = 400;

    pub fn new(temperature: S) -> Result<Self> {
        let tp = Self {
            temperature,
            weight_cutoff: S::lit(Self::DEFAULT_CUTOFF),
            n_max: Self::DEFAULT_N_MAX,
            enhancement_warn_threshold: S::lit(0.1),
        };
        tp.validate()?;
        Ok(tp)
    }

    pub fn with_cutoff(mut self, eps: S) -> Result<Self> {
        self.weight_cutoff = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        self.n_max = n_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > S::zero()) || !self.temperature.is_finite() {
            return Err(OtocError::InvalidParameter(format!(
                "temperature must be finite and > 0, got {}",
                self.temperature
            )));
        }
        if !(self.weight_cutoff > S::zero() && self.weight_cutoff < S::one()) {
            return Err(OtocError::InvalidParameter(format!(
                "weight cutoff must lie in (0, 1), got {}",
                self.weight_cutoff
            )));
        }
        if self.n_max < 1 {
            return Err(OtocError::InvalidParameter("n_max must be >= 1".into()));
        }
        if !(self.enhancement_warn_threshold > S::zero()) {
            return Err(OtocError::InvalidParameter("enhancement threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// Normalized Boltzmann weights over the retained levels `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalWeights<S = f64> {
    pub weights: Vec<(usize, S)>,
    /// Set when the spectrum ended before either cutoff was hit.
    pub exhausted: bool,
}

impl<S: Scalar> ThermalWeights<S> {
    pub fn retained(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, n: usize) -> S {
        self.weights.get(n).map(|&(_, w)| w).unwrap_or_else(S::zero)
    }
}

/// `exp(-(E_n - E_0)/T) / Z'`, stopping at the first level whose unnormalized
/// weight drops below the cutoff, or at `n_max` levels.
pub fn partition_weights<S: Scalar>(spec: &Spectrum<S>, tp: &ThermalParams<S>) -> ThermalWeights<S> {
    let e0 = spec.energy(0);
    let mut raw = Vec::new();
    let mut exhausted = true;
    for n in 0..spec.len() {
        if n >= tp.n_max {
            exhausted = false;
            break;
        }
        let w = (-(spec.energy(n) - e0) / tp.temperature).exp();
        if w < tp.weight_cutoff {
            exhausted = false;
            break;
        }
        raw.push(w);
    }
    let z = raw.iter().fold(S::zero(), |a, &b| a + b);
    if exhausted {
        log::warn!("spectrum of {} levels exhausted before the thermal cutoff", spec.len());
    }
    ThermalWeights { weights: raw.into_iter().map(|w| w / z).enumerate().collect(), exhausted }
}

/// `C_T(t) = sum_n w_n c_n(t)`.
pub fn thermal_otoc<S: Scalar>(
    grid: &TimeGrid<S>,
    spec: &Spectrum<S>,
    x: &TransitionTable<S>,
    tp: &ThermalParams<S>,
) -> Result<OtocSeries<S>> {
    tp.validate()?;
    let weights = partition_weights(spec, tp);
    let retained = weights.retained();
    let needed = retained + B_BAND_WIDTH;
    let available = x.dim().min(spec.len());
    if available < needed {
        return Err(OtocError::TruncationTooSmall { needed, available });
    }
    let mut warnings = Vec::new();
    if weights.exhausted {
        warnings.push(ValidityWarning::SpectrumExhausted { levels: spec.len() });
    }
    let top = retained.saturating_sub(1);
    let g_top = x.g() * S::from_usize_lossy(top);
    if g_top > tp.enhancement_warn_threshold {
        log::warn!(
            "T = {}: g * n = {} at the top retained level {top} exceeds {}",
            tp.temperature,
            g_top,
            tp.enhancement_warn_threshold
        );
        warnings.push(ValidityWarning::Enhancement {
            level: top,
            g_times_level: g_top.to_f64_lossy(),
            threshold: tp.enhancement_warn_threshold.to_f64_lossy(),
        });
    }
    let values = weighted_otoc(&weights.weights, grid, spec, x);
    Ok(OtocSeries {
        grid: *grid,
        values,
        kind: SeriesKind::Thermal {
            temperature: tp.temperature.to_f64_lossy(),
            retained_levels: retained,
        },
        provenance: Some(Provenance::of(spec, x)),
        warnings,
    })
}

/// Boltzmann average of a per-level quantity.
pub fn thermal_expectation<S: Scalar>(
    per_level: &[S],
    spec: &Spectrum<S>,
    tp: &ThermalParams<S>,
) -> Result<S> {
    let weights = partition_weights(spec, tp);
    if per_level.len() < weights.retained() {
        return Err(OtocError::SeriesTooShort {
            what: format!(
                "{} per-level values for {} retained levels",
                per_level.len(),
                weights.retained()
            ),
        });
    }
    Ok(weights.weights.iter().fold(S::zero(), |acc, &(n, w)| acc + w * per_level[n]))
}

/// `(<x^2>_T, <p^2>_T)` from per-level closures.
pub fn thermal_second_moments<S: Scalar>(
    spec: &Spectrum<S>,
    tp: &ThermalParams<S>,
    x2: impl Fn(usize) -> S,
    p2: impl Fn(usize) -> S,
) -> Result<(S, S)> {
    let weights = partition_weights(spec, tp);
    let xs: Vec<S> = (0..weights.retained()).map(&x2).collect();
    let ps: Vec<S> = (0..weights.retained()).map(&p2).collect();
    Ok((thermal_expectation(&xs, spec, tp)?, thermal_expectation(&ps, spec, tp)?))
}
