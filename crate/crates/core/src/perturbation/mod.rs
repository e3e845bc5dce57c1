//! Closed-form Rayleigh-Schrödinger results for `H = a†a + 1/2 + g x^4`
//! in units `ħ = ω = M = 1`, carried to third order in `g`.
//!
//! Two coefficient sets are available. [`CoefficientSet::Printed`] is the
//! literal transcription of the published third-order tables.
//! [`CoefficientSet::Corrected`] differs in exactly three places, each
//! confirmed against exact diagonalization (error shrinking as `g^4`):
//!
//! * the third-order energy `E_n^(3) = (375 u^2 + 1041 u + 333) / 16`, `u = n(n+1)`;
//! * the sign of the `|n-2>` coefficient of the second-order state;
//! * the sign of the `m = n ± 5` bands of the position matrix element.

mod position;
mod states;

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{OtocError, Result};
use crate::scalar::Scalar;
use crate::series::{GSeries, MAX_ORDER};

pub use position::{
    p2_expectation, p2_series, position_element, position_series, x2_expectation, x2_series,
    BAND_WIDTH,
};
pub use states::{allowed_offsets, state_coefficients, StateCoefficientTable};

/// Exact rational used for the printed energy polynomials.
pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientSet {
    #[default]
    Printed,
    Corrected,
}

impl fmt::Display for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoefficientSet::Printed => "printed",
            CoefficientSet::Corrected => "corrected",
        })
    }
}

impl FromStr for CoefficientSet {
    type Err = OtocError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "corrected" => Ok(Self::Corrected),
            other => Err(OtocError::InvalidParameter(format!(
                "unknown coefficient set {other:?} (expected printed|corrected)"
            ))),
        }
    }
}

/// Coupling, truncation order and validity policy of a perturbative evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<S = f64> {
    pub g: S,
    pub order: u8,
    pub enhancement_warn_threshold: S,
    pub coefficients: CoefficientSet,
}

impl<S: Scalar> ModelParams<S> {
    pub const DEFAULT_ENHANCEMENT_THRESHOLD: f64 = 0.1;

    pub fn new(g: S, order: u8) -> Result<Self> {
        let params = Self {
            g,
            order,
            enhancement_warn_threshold: S::lit(Self::DEFAULT_ENHANCEMENT_THRESHOLD),
            coefficients: CoefficientSet::Printed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_coefficients(mut self, coefficients: CoefficientSet) -> Self {
        self.coefficients = coefficients;
        self
    }

    pub fn with_threshold(mut self, threshold: S) -> Result<Self> {
        self.enhancement_warn_threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g >= S::zero()) || !self.g.is_finite() {
            return Err(OtocError::InvalidParameter(format!(
                "coupling g must be finite and >= 0, got {}",
                self.g
            )));
        }
        check_order(self.order)?;
        if !(self.enhancement_warn_threshold > S::zero()) {
            return Err(OtocError::InvalidParameter(
                "enhancement threshold must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn order_index(&self) -> usize {
        self.order as usize
    }

    /// `g * n` above the threshold marks a level where the series is no
    /// longer small.
    pub fn enhancement_exceeded(&self, n: usize) -> bool {
        self.g * S::from_usize_lossy(n) > self.enhancement_warn_threshold
    }
}

pub fn check_order(order: u8) -> Result<()> {
    if order as usize > MAX_ORDER {
        Err(OtocError::OrderOutOfRange(order))
    } else {
        Ok(())
    }
}

/// `prod_{j=lo}^{hi} sqrt(n + j)`, zero as soon as any factor would reach
/// below level 0.
pub(crate) fn sqrt_run<S: Scalar>(n: usize, lo: i64, hi: i64) -> S {
    let mut acc = 1.0f64;
    for j in lo..=hi {
        let level = n as i64 + j;
        if level <= 0 {
            return S::zero();
        }
        acc *= (level as f64).sqrt();
    }
    S::lit(acc)
}

/// `<k|V|n>` for `V = x^4 = (a† + a)^4 / 4`.
pub fn potential_element<S: Scalar>(k: usize, n: usize) -> S {
    let nn = n as i128;
    let quarter = S::lit(0.25);
    let half = S::lit(0.5);
    match k as i64 - n as i64 {
        0 => S::from_i128_lossy(3 * (2 * nn * (nn + 1) + 1)) * quarter,
        2 => sqrt_run::<S>(n, 1, 2) * S::from_i128_lossy(2 * nn + 3) * half,
        -2 => sqrt_run::<S>(n, -1, 0) * S::from_i128_lossy(2 * nn - 1) * half,
        4 => sqrt_run::<S>(n, 1, 4) * quarter,
        -4 => sqrt_run::<S>(n, -3, 0) * quarter,
        _ => S::zero(),
    }
}

/// `E_n^(j)`, evaluated exactly.
pub fn energy_correction(n: usize, j: u8, set: CoefficientSet) -> Result<Rational> {
    check_order(j)?;
    let n = n as i128;
    let u = n * (n + 1);
    let r = |num: i128, den: i128| Rational::new(num, den);
    Ok(match j {
        0 => r(2 * n + 1, 2),
        1 => r(3 * (1 + 2 * u), 4),
        2 => r(-((1 + 2 * n) * (21 + 17 * u)), 8),
        _ => match set {
            CoefficientSet::Printed => r(11748 + u * (37202 + u * (14987 + 390 * u)), 512),
            CoefficientSet::Corrected => r(375 * u * u + 1041 * u + 333, 16),
        },
    })
}

pub(crate) fn rational_to<S: Scalar>(q: Rational) -> S {
    S::from_i128_lossy(*q.numer()) / S::from_i128_lossy(*q.denom())
}

/// `E_n` as a series in `g` (all four orders present).
pub fn energy_series<S: Scalar>(n: usize, set: CoefficientSet) -> GSeries<S> {
    let mut c = [S::zero(); MAX_ORDER + 1];
    for (j, slot) in c.iter_mut().enumerate() {
        *slot = rational_to(energy_correction(n, j as u8, set).expect("order in range"));
    }
    GSeries(c)
}

/// Perturbative energy truncated at `params.order`; logs a warning when the
/// level is beyond the enhancement threshold.
pub fn energy<S: Scalar>(n: usize, params: &ModelParams<S>) -> S {
    if params.enhancement_exceeded(n) {
        log::warn!(
            "level {n}: g*n = {} exceeds enhancement threshold {}",
            params.g * S::from_usize_lossy(n),
            params.enhancement_warn_threshold
        );
    }
    energy_series::<S>(n, params.coefficients)
        .truncate(params.order_index())
        .eval(params.g)
}
