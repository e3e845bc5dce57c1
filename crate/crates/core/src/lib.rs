//! Out-of-time-order correlators of the quartic anharmonic oscillator from
//! closed-form third-order perturbation theory, with an exact-diagonalization
//! oracle sharing the same kernel.

// `!(x > 0)` is the NaN-rejecting form used by every parameter check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod perturbation;
pub mod scalar;
pub mod series;

pub use error::{OtocError, Result};
pub use perturbation::CoefficientSet;
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type ModelParams = perturbation::ModelParams<Real>;
pub type Spectrum = engine::Spectrum<Real>;
pub type TransitionTable = engine::TransitionTable<Real>;
pub type TimeGrid = engine::TimeGrid<Real>;
pub type OtocSeries = engine::OtocSeries<Real>;
pub type ThermalParams = engine::ThermalParams<Real>;
pub type FitReport = analysis::FitReport<Real>;
pub type SaturationReport = analysis::SaturationReport<Real>;
pub type EigenSystem = oracle::EigenSystem<Real>;

pub type ModelParamsF32 = perturbation::ModelParams<f32>;
pub type SpectrumF32 = engine::Spectrum<f32>;
pub type TransitionTableF32 = engine::TransitionTable<f32>;
pub type OtocSeriesF32 = engine::OtocSeries<f32>;
