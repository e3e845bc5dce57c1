//! Shared OTOC kernel: `b_nm(t)`, microcanonical `c_n(t)` and thermal
//! `C_T(t)` from any spectrum / transition-table pair.
//!
//! With `M = ħ = 1`,
//!
//! ```text
//! b_nm(t) = sum_k x_nk x_km (exp(i E_nk t) E_km - exp(i E_km t) E_nk)
//! c_n(t)  = sum_m |b_nm(t)|^2
//! C_T(t)  = sum_n w_n c_n(t)
//! ```
//!
//! Amplitudes `x_nk x_km E_km` are multiplied as series in `g` and cut at the
//! table order; phases use the full (un-expanded) energies.

mod appendix;
mod backend;
mod thermal;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OtocError, Result};
use crate::perturbation::{CoefficientSet, BAND_WIDTH};
use crate::scalar::Scalar;
use crate::series::{GSeries, MAX_ORDER};

pub use appendix::appendix_b_diag;
pub use backend::{perturbative_backend, sho_backend};
pub use thermal::{
    partition_weights, thermal_expectation, thermal_otoc, thermal_second_moments, ThermalParams,
    ThermalWeights,
};

/// Largest `|m - n|` with a nonzero `b_nm`.
pub const B_BAND_WIDTH: usize = 8;

const SLOTS: usize = 2 * BAND_WIDTH + 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpectrumSource {
    Perturbative { order: u8, coefficients: CoefficientSet },
    Oracle { dim: usize },
    Sho,
}

/// Energies `E_n` indexed by level, carried as series in `g` so amplitude
/// products can be truncated consistently.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<S = f64> {
    series: Vec<GSeries<S>>,
    energies: Vec<S>,
    g: S,
    truncation: usize,
    source: SpectrumSource,
}

impl<S: Scalar> Spectrum<S> {
    /// Spectrum from series in `g`, truncated at `order`.
    pub fn from_series(series: Vec<GSeries<S>>, g: S, order: u8, source: SpectrumSource) -> Self {
        let truncation = order as usize;
        let series: Vec<_> = series.into_iter().map(|s| s.truncate(truncation)).collect();
        let energies = series.iter().map(|s| s.eval(g)).collect();
        Self { series, energies, g, truncation, source }
    }

    /// Spectrum from plain energies (oracle, free oscillator).
    pub fn from_values(energies: Vec<S>, g: S, source: SpectrumSource) -> Self {
        let series = energies.iter().map(|&e| GSeries::constant(e)).collect();
        Self { series, energies, g, truncation: MAX_ORDER, source }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energy(&self, n: usize) -> S {
        self.energies[n]
    }

    pub fn energies(&self) -> &[S] {
        &self.energies
    }

    pub fn series(&self, n: usize) -> &GSeries<S> {
        &self.series[n]
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    pub fn g(&self) -> S {
        self.g
    }

    /// `true` when energies increase strictly with level.
    pub fn is_strictly_increasing(&self) -> bool {
        self.energies.windows(2).all(|w| w[1] > w[0])
    }
}

/// Banded position matrix `x_mn` (`|m - n| <= 7`) in the energy eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable<S = f64> {
    dim: usize,
    /// `rows[n][d + 7]` holds `x_{n, n+d}`.
    rows: Vec<[GSeries<S>; SLOTS]>,
    g: S,
    order: Option<u8>,
}

impl<S: Scalar> TransitionTable<S> {
    /// Builds a table from a closure returning `x_mn` as a series.
    pub fn from_fn(
        dim: usize,
        g: S,
        order: Option<u8>,
        mut entry: impl FnMut(usize, usize) -> GSeries<S>,
    ) -> Self {
        let cut = order.map(|o| o as usize).unwrap_or(MAX_ORDER);
        let rows = (0..dim)
            .map(|n| {
                let mut row = [GSeries::zero(); SLOTS];
                for (slot, cell) in row.iter_mut().enumerate() {
                    let m = n as i64 + slot as i64 - BAND_WIDTH as i64;
                    if m >= 0 && (m as usize) < dim {
                        *cell = entry(n, m as usize).truncate(cut);
                    }
                }
                row
            })
            .collect();
        Self { dim, rows, g, order }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn g(&self) -> S {
        self.g
    }

    /// Perturbative order, or `None` for an exact (oracle / free) table.
    pub fn order(&self) -> Option<u8> {
        self.order
    }

    fn truncation(&self) -> usize {
        self.order.map(|o| o as usize).unwrap_or(MAX_ORDER)
    }

    pub fn series(&self, m: usize, n: usize) -> GSeries<S> {
        let d = m as i64 - n as i64;
        if m >= self.dim || n >= self.dim || d.unsigned_abs() as usize > BAND_WIDTH {
            return GSeries::zero();
        }
        self.rows[m][(BAND_WIDTH as i64 - d) as usize]
    }

    /// `x_mn` evaluated at the table coupling.
    pub fn get(&self, m: usize, n: usize) -> S {
        self.series(m, n).eval(self.g)
    }
}

/// One `k` contribution to `b_nm(t)`: `fwd * e^{i w_fwd t} - bwd * e^{i w_bwd t}`.
#[derive(Debug, Clone, Copy)]
struct KernelTerm<S> {
    fwd: S,
    bwd: S,
    /// Phase-table keys for `E_n - E_k` and `E_k - E_m`.
    fwd_phase: PhaseKey,
    bwd_phase: PhaseKey,
}

/// `e^{i (E_a - E_b) t}` is stored once per unordered pair `(low, d)`.
#[derive(Debug, Clone, Copy)]
struct PhaseKey {
    low: u32,
    d: u8,
    conj: bool,
}

impl PhaseKey {
    fn new(a: usize, b: usize) -> Self {
        if a == b {
            Self { low: a as u32, d: 0, conj: false }
        } else if a > b {
            Self { low: b as u32, d: (a - b) as u8, conj: false }
        } else {
            Self { low: a as u32, d: (b - a) as u8, conj: true }
        }
    }
}

fn check_level(level: usize, dim: usize) -> Result<()> {
    if level >= dim {
        Err(OtocError::LevelOutOfRange { level, dim })
    } else {
        Ok(())
    }
}

fn kernel_terms<S: Scalar>(
    n: usize,
    m: usize,
    spec: &Spectrum<S>,
    x: &TransitionTable<S>,
) -> Vec<KernelTerm<S>> {
    let dim = x.dim().min(spec.len());
    let cut = x.truncation().min(spec.truncation);
    let g = x.g();
    let lo = n.saturating_sub(BAND_WIDTH).max(m.saturating_sub(BAND_WIDTH));
    let hi = (n + BAND_WIDTH).min(m + BAND_WIDTH).min(dim - 1);
    let mut terms = Vec::new();
    for k in lo..=hi {
        let amp = x.series(n, k).mul_truncated(&x.series(k, m), cut);
        if amp.is_zero() {
            continue;
        }
        let e_km = *spec.series(k) - *spec.series(m);
        let e_nk = *spec.series(n) - *spec.series(k);
        terms.push(KernelTerm {
            fwd: amp.mul_truncated(&e_km, cut).eval(g),
            bwd: amp.mul_truncated(&e_nk, cut).eval(g),
            // e^{i E_nk t} = e^{i (E_n - E_k) t}
            fwd_phase: PhaseKey::new(n, k),
            bwd_phase: PhaseKey::new(k, m),
        });
    }
    terms
}

/// Phase table for a single time sample: `e^{i (E_{a+d} - E_a) t}`.
struct Phases<S> {
    table: Vec<Complex<S>>,
}

impl<S: Scalar> Phases<S> {
    fn new(levels: usize) -> Self {
        Self { table: vec![Complex::new(S::one(), S::zero()); levels * (BAND_WIDTH + 1)] }
    }

    fn fill(&mut self, energies: &[S], levels: usize, t: S) {
        for a in 0..levels {
            let base = a * (BAND_WIDTH + 1);
            for d in 1..=BAND_WIDTH {
                if a + d >= energies.len() {
                    break;
                }
                let (s, c) = ((energies[a + d] - energies[a]) * t).sin_cos();
                self.table[base + d] = Complex::new(c, s);
            }
        }
    }

    #[inline]
    fn get(&self, key: PhaseKey) -> Complex<S> {
        let z = self.table[key.low as usize * (BAND_WIDTH + 1) + key.d as usize];
        if key.conj {
            z.conj()
        } else {
            z
        }
    }
}

#[inline]
fn sum_terms<S: Scalar>(terms: &[KernelTerm<S>], phases: &Phases<S>) -> Complex<S> {
    let mut acc = Complex::new(S::zero(), S::zero());
    for term in terms {
        acc = acc + phases.get(term.fwd_phase).scale(term.fwd)
            - phases.get(term.bwd_phase).scale(term.bwd);
    }
    acc
}

/// `b_nm(t) = -i <n|[x(t), p(0)]|m>`.
pub fn b_element<S: Scalar>(
    n: usize,
    m: usize,
    t: S,
    spec: &Spectrum<S>,
    x: &TransitionTable<S>,
) -> Result<Complex<S>> {
    let dim = x.dim().min(spec.len());
    check_level(n, dim)?;
    check_level(m, dim)?;
    if (n as i64 - m as i64).unsigned_abs() as usize > 2 * BAND_WIDTH {
        return Ok(Complex::new(S::zero(), S::zero()));
    }
    let terms = kernel_terms(n, m, spec, x);
    let mut acc = Complex::new(S::zero(), S::zero());
    for term in &terms {
        let phase = |key: PhaseKey| {
            let (hi, lo) = if key.conj {
                (key.low as usize, key.low as usize + key.d as usize)
            } else {
                (key.low as usize + key.d as usize, key.low as usize)
            };
            let (s, c) = ((spec.energy(hi) - spec.energy(lo)) * t).sin_cos();
            Complex::new(c, s)
        };
        acc = acc + phase(term.fwd_phase).scale(term.fwd) - phase(term.bwd_phase).scale(term.bwd);
    }
    Ok(acc)
}

/// Uniform time samples `t_i = i * dt`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<S = f64> {
    pub dt: S,
    pub len: usize,
}

impl<S: Scalar> TimeGrid<S> {
    /// Grid covering `[0, t_max]` inclusive.
    pub fn new(t_max: S, dt: S) -> Result<Self> {
        if !(dt > S::zero()) || !(t_max >= S::zero()) || !t_max.is_finite() {
            return Err(OtocError::InvalidParameter(format!(
                "time grid needs dt > 0 and t_max >= 0 (dt = {dt}, t_max = {t_max})"
            )));
        }
        let steps = (t_max / dt).round().to_usize().ok_or_else(|| {
            OtocError::InvalidParameter("time grid too long".into())
        })?;
        Ok(Self { dt, len: steps + 1 })
    }

    pub fn t(&self, i: usize) -> S {
        self.dt * S::from_usize_lossy(i)
    }

    pub fn t_max(&self) -> S {
        self.t(self.len.saturating_sub(1))
    }

    pub fn times(&self) -> Vec<S> {
        (0..self.len).map(|i| self.t(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SeriesKind {
    Microcanonical { level: usize },
    Thermal { temperature: f64, retained_levels: usize },
    /// Read from an external file.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidityWarning {
    /// `g * level` above the perturbative threshold.
    Enhancement { level: usize, g_times_level: f64, threshold: f64 },
    /// The `m` band of `c_n` reaches past the truncation.
    ClippedBand { level: usize, dim: usize },
    /// The spectrum ended before the Boltzmann weights fell below the cutoff.
    SpectrumExhausted { levels: usize },
}

/// Snapshot of where a series came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: SpectrumSource,
    pub g: f64,
    pub table_order: Option<u8>,
    pub table_dim: usize,
}

impl Provenance {
    pub fn of<S: Scalar>(spec: &Spectrum<S>, x: &TransitionTable<S>) -> Self {
        Self {
            source: spec.source(),
            g: x.g().to_f64_lossy(),
            table_order: x.order(),
            table_dim: x.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtocSeries<S = f64> {
    pub grid: TimeGrid<S>,
    pub values: Vec<S>,
    pub kind: SeriesKind,
    pub provenance: Option<Provenance>,
    pub warnings: Vec<ValidityWarning>,
}

impl<S: Scalar> OtocSeries<S> {
    pub fn times(&self) -> Vec<S> {
        self.grid.times()
    }

    /// A bare series (no physics provenance), e.g. loaded from disk.
    pub fn external(grid: TimeGrid<S>, values: Vec<S>) -> Self {
        Self { grid, values, kind: SeriesKind::External, provenance: None, warnings: Vec::new() }
    }
}

/// Weighted sum of `c_n(t)` over `levels`; the per-sample summation order is
/// fixed (ascending `n`, `m`, `k`) so results do not depend on scheduling.
pub(crate) fn weighted_otoc<S: Scalar>(
    levels: &[(usize, S)],
    grid: &TimeGrid<S>,
    spec: &Spectrum<S>,
    x: &TransitionTable<S>,
) -> Vec<S> {
    let dim = x.dim().min(spec.len());
    // (weight, [terms for each m])
    let kernels: Vec<(S, Vec<Vec<KernelTerm<S>>>)> = levels
        .iter()
        .map(|&(n, w)| {
            let lo = n.saturating_sub(B_BAND_WIDTH);
            let hi = (n + B_BAND_WIDTH).min(dim - 1);
            let per_m = (lo..=hi)
                .filter(|m| (m + n) % 2 == 0)
                .map(|m| kernel_terms(n, m, spec, x))
                .filter(|t| !t.is_empty())
                .collect();
            (w, per_m)
        })
        .collect();
    let max_level = levels.iter().map(|&(n, _)| n).max().unwrap_or(0);
    let phase_levels = (max_level + 2 * B_BAND_WIDTH + 1).min(spec.len());
    let energies = spec.energies();

    const CHUNK: usize = 64;
    let mut out = vec![S::zero(); grid.len];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, slice)| {
        let mut phases = Phases::new(phase_levels);
        for (offset, value) in slice.iter_mut().enumerate() {
            let t = grid.t(chunk * CHUNK + offset);
            phases.fill(energies, phase_levels, t);
            let mut total = S::zero();
            for (w, per_m) in &kernels {
                let mut c_n = S::zero();
                for terms in per_m {
                    c_n += sum_terms(terms, &phases).norm_sqr();
                }
                total += *w * c_n;
            }
            *value = total;
        }
    });
    out
}

/// `c_n(t) = sum_m |b_nm(t)|^2` over `|m - n| <= 8`.
pub fn microcanonical_otoc<S: Scalar>(
    n: usize,
    grid: &TimeGrid<S>,
    spec: &Spectrum<S>,
    x: &TransitionTable<S>,
) -> Result<OtocSeries<S>> {
    let dim = x.dim().min(spec.len());
    check_level(n, dim)?;
    let mut warnings = Vec::new();
    if n + B_BAND_WIDTH >= dim {
        log::warn!("level {n}: m-band clipped by truncation at {dim}");
        warnings.push(ValidityWarning::ClippedBand { level: n, dim });
    }
    let values = weighted_otoc(&[(n, S::one())], grid, spec, x);
    Ok(OtocSeries {
        grid: *grid,
        values,
        kind: SeriesKind::Microcanonical { level: n },
        provenance: Some(Provenance::of(spec, x)),
        warnings,
    })
}
