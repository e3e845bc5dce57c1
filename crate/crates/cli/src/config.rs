use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otoc_core::analysis::FitWindow;
use otoc_core::CoefficientSet;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "otoc", version, about = "OTOCs of the quartic anharmonic oscillator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Energy corrections and total energies per level.
    Spectrum(CommonArgs),
    /// Thermal OTOC C_T(t) for each temperature.
    Otoc(CommonArgs),
    /// Log-linear growth fit of C_T(t) (or of a `t,value` file).
    Lyapunov(LyapunovArgs),
    /// Late-time plateau against 2<x^2>_T<p^2>_T over a temperature sweep.
    Saturation(CommonArgs),
    /// Perturbative vs exact-diagonalization differences at g and g/2.
    OracleCompare(CommonArgs),
    /// Data for figures 1-6 into a directory.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Perturbative,
    Oracle,
    Sho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Structured,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Quartic coupling.
    #[arg(long, default_value_t = 0.001)]
    pub g: f64,

    /// Temperature (repeatable or comma separated).
    #[arg(long = "temp", value_delimiter = ',')]
    pub temps: Vec<f64>,

    /// Perturbation order.
    #[arg(long, default_value_t = 3)]
    pub order: u8,

    #[arg(long, value_enum, default_value_t = Backend::Perturbative)]
    pub backend: Backend,

    /// Coefficient tables used by the perturbative backend.
    #[arg(long, default_value_t = CoefficientSet::Printed)]
    pub coefficients: CoefficientSet,

    /// Final time (default 200 at order 3, 10000 below).
    #[arg(long)]
    pub tmax: Option<f64>,

    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,

    /// Hard cap on thermal levels (and on spectrum rows).
    #[arg(long, default_value_t = 400)]
    pub nmax: usize,

    /// Boltzmann weight cutoff.
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,

    /// Fit window `LO:HI`.
    #[arg(long, default_value = "20:50", value_parser = parse_window)]
    #[serde(serialize_with = "ser_window")]
    pub window: FitWindow,

    /// Fit the centred rolling maximum (5 samples) instead of the raw series.
    #[arg(long)]
    pub envelope: bool,

    /// Fraction of the series used for each tail window.
    #[arg(long, default_value_t = 0.25)]
    pub tail_fraction: f64,

    /// Oracle basis dimension.
    #[arg(long, default_value_t = 200)]
    pub oracle_n: usize,

    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// One CSV with a column per temperature.
    #[arg(long)]
    pub wide: bool,

    /// Exit with status 4 on any validity warning.
    #[arg(long)]
    pub strict: bool,
}

impl CommonArgs {
    pub fn tmax_for(&self, order: u8) -> f64 {
        self.tmax.unwrap_or(if order >= 3 { 200.0 } else { 10000.0 })
    }

    pub fn temps_or(&self, default: &[f64]) -> Vec<f64> {
        if self.temps.is_empty() {
            default.to_vec()
        } else {
            self.temps.clone()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LyapunovArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,

    /// Fit a `t,value` CSV instead of computing C_T.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FiguresArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,

    /// Restrict to some figures (e.g. `--only fig1,fig4`).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
}

fn parse_window(s: &str) -> Result<FitWindow, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("window start: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("window end: {e}"))?;
    FitWindow::new(lo, hi).map_err(|e| e.to_string())
}

fn ser_window<S: serde::Serializer>(w: &FitWindow, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}:{}", w.lo, w.hi))
}
