use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::rc::Rc;

use otoc_core::analysis::{
    lyapunov_fit, lyapunov_fit_envelope, saturation_stats, saturation_vs_reference, FitReport,
    FitWindow,
};
use otoc_core::engine::{
    microcanonical_otoc, perturbative_backend, sho_backend, thermal_otoc, thermal_second_moments,
    OtocSeries, Spectrum, ThermalParams, TimeGrid, TransitionTable, ValidityWarning, B_BAND_WIDTH,
};
use otoc_core::oracle::{
    build_hamiltonian, default_keep, diagonalize, oracle_second_moments, oracle_transition_table,
    EigenSystem, DEFAULT_TOL,
};
use otoc_core::perturbation::{
    energy_correction, p2_expectation, position_element, x2_expectation, ModelParams,
};

use crate::config::{Backend, CommonArgs};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Document};

pub const FIG3_TEMPS: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 40.0];
pub const FIG1_TEMPS: [f64; 3] = [10.0, 20.0, 40.0];
const TREND_SIGNIFICANCE: f64 = 2.0;
const WINDOW_SHIFT: f64 = 5.0;

struct Built {
    spec: Spectrum,
    x: TransitionTable,
    eigen: Option<EigenSystem>,
}

/// Shared state of one invocation: cached backends and collected warnings.
pub struct Context<'a> {
    pub args: &'a CommonArgs,
    backends: BTreeMap<(u8, u64), Rc<Built>>,
    pub warnings: Vec<String>,
}

impl<'a> Context<'a> {
    pub fn new(args: &'a CommonArgs) -> Self {
        Self { args, backends: BTreeMap::new(), warnings: Vec::new() }
    }

    fn params(&self, g: f64, order: u8) -> CliResult<ModelParams> {
        Ok(ModelParams::new(g, order)?.with_coefficients(self.args.coefficients))
    }

    fn backend(&mut self, g: f64, order: u8) -> CliResult<Rc<Built>> {
        let key = (order, g.to_bits());
        if let Some(b) = self.backends.get(&key) {
            return Ok(b.clone());
        }
        let dim = self.args.nmax + B_BAND_WIDTH + 1;
        let built = match self.args.backend {
            Backend::Perturbative => {
                let (spec, x) = perturbative_backend(&self.params(g, order)?, dim)?;
                Built { spec, x, eigen: None }
            }
            Backend::Sho => {
                let (spec, x) = sho_backend(dim);
                Built { spec, x, eigen: None }
            }
            Backend::Oracle => {
                let es = diagonalize(&build_hamiltonian(self.args.oracle_n, g)?, DEFAULT_TOL)?;
                let (spec, x) = oracle_transition_table(&es, default_keep(es.dim))?;
                Built { spec, x, eigen: Some(es) }
            }
        };
        let built = Rc::new(built);
        self.backends.insert(key, built.clone());
        Ok(built)
    }

    fn thermal_params(&self, temp: f64) -> CliResult<ThermalParams> {
        Ok(ThermalParams::new(temp)?.with_cutoff(self.args.eps)?.with_n_max(self.args.nmax)?)
    }

    fn note(&mut self, series: &OtocSeries) {
        let label = match series.kind {
            otoc_core::engine::SeriesKind::Thermal { temperature, .. } => format!("T={temperature}"),
            otoc_core::engine::SeriesKind::Microcanonical { level } => format!("n={level}"),
            otoc_core::engine::SeriesKind::External => "input".into(),
        };
        for w in &series.warnings {
            let text = match w {
                ValidityWarning::Enhancement { level, g_times_level, threshold } => format!(
                    "{label}: g*n = {g_times_level} at retained level {level} exceeds {threshold}"
                ),
                ValidityWarning::ClippedBand { level, dim } => {
                    format!("{label}: band of level {level} clipped at dimension {dim}")
                }
                ValidityWarning::SpectrumExhausted { levels } => {
                    format!("{label}: spectrum of {levels} levels exhausted before the weight cutoff")
                }
            };
            self.warnings.push(text);
        }
    }

    pub fn thermal(&mut self, g: f64, order: u8, temp: f64, tmax: f64) -> CliResult<OtocSeries> {
        let b = self.backend(g, order)?;
        let grid = TimeGrid::new(tmax, self.args.dt)?;
        let series = thermal_otoc(&grid, &b.spec, &b.x, &self.thermal_params(temp)?)?;
        self.note(&series);
        Ok(series)
    }

    /// `2 <x^2>_T <p^2>_T` from the backend's own per-level moments.
    pub fn reference(&mut self, g: f64, order: u8, temp: f64) -> CliResult<f64> {
        let b = self.backend(g, order)?;
        let tp = self.thermal_params(temp)?;
        let (x2, p2) = match (&b.eigen, self.args.backend) {
            (Some(es), _) => thermal_second_moments(
                &b.spec,
                &tp,
                |n| oracle_second_moments(es, n).0,
                |n| oracle_second_moments(es, n).1,
            )?,
            (None, Backend::Sho) => {
                thermal_second_moments(&b.spec, &tp, |n| n as f64 + 0.5, |n| n as f64 + 0.5)?
            }
            (None, _) => {
                let params = self.params(g, order)?;
                thermal_second_moments(
                    &b.spec,
                    &tp,
                    |n| x2_expectation(n, &params),
                    |n| p2_expectation(n, &params),
                )?
            }
        };
        Ok(2.0 * x2 * p2)
    }

    pub fn check_strict(&self) -> CliResult<()> {
        if self.args.strict && !self.warnings.is_empty() {
            return Err(CliError::Strict(self.warnings.clone()));
        }
        Ok(())
    }
}

fn temp_label(t: f64) -> String {
    format!("T{t}")
}

pub fn spectrum(ctx: &mut Context) -> CliResult<Vec<Document>> {
    let args = ctx.args;
    let params = ctx.params(args.g, args.order)?;
    let mut columns: Vec<String> = vec!["n".into()];
    for j in 0..=args.order {
        columns.push(format!("E{j}"));
    }
    columns.push("energy".into());
    let b = ctx.backend(args.g, args.order)?;
    let rows_wanted = args.nmax + 1;
    if rows_wanted > b.spec.len() {
        return Err(CliError::Config(format!(
            "backend holds {} levels, {} requested",
            b.spec.len(),
            rows_wanted
        )));
    }
    let mut rows = Vec::with_capacity(rows_wanted);
    let mut flagged = None;
    for n in 0..rows_wanted {
        let mut row = vec![Cell::Int(n)];
        for j in 0..=args.order {
            let q = energy_correction(n, j, params.coefficients)?;
            row.push(Cell::Num(*q.numer() as f64 / *q.denom() as f64));
        }
        row.push(Cell::Num(b.spec.energy(n)));
        rows.push(row);
        if flagged.is_none() && args.backend == Backend::Perturbative && params.enhancement_exceeded(n) {
            flagged = Some(n);
        }
    }
    if let Some(n) = flagged {
        let text = format!("levels from n = {n} have g*n above {}", params.enhancement_warn_threshold);
        log::warn!("{text}");
        ctx.warnings.push(text);
    }
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    Ok(vec![Document::table(&cols, rows)])
}

/// Either one wide table or one `t,value` table per temperature.
fn otoc_documents(series: &[(f64, OtocSeries)], wide: bool) -> Vec<Document> {
    if series.is_empty() {
        return Vec::new();
    }
    let times = series[0].1.times();
    if wide || series.len() == 1 {
        let mut columns = vec!["t".to_string()];
        if series.len() == 1 && !wide {
            columns.push("value".into());
        } else {
            columns.extend(series.iter().map(|(t, _)| temp_label(*t)));
        }
        let rows = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut row = vec![Cell::Num(t)];
                row.extend(series.iter().map(|(_, s)| Cell::Num(s.values[i])));
                row
            })
            .collect();
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        return vec![Document::table(&cols, rows)];
    }
    series
        .iter()
        .map(|(temp, s)| {
            let rows = times.iter().zip(&s.values).map(|(&t, &v)| vec![t.into(), v.into()]).collect();
            Document::table(&["t", "value"], rows).named(temp_label(*temp))
        })
        .collect()
}

pub fn otoc(ctx: &mut Context) -> CliResult<Vec<Document>> {
    let args = ctx.args;
    let tmax = args.tmax_for(args.order);
    let mut series = Vec::new();
    for temp in args.temps_or(&FIG1_TEMPS) {
        series.push((temp, ctx.thermal(args.g, args.order, temp, tmax)?));
    }
    Ok(otoc_documents(&series, args.wide))
}

fn fit(series: &OtocSeries, window: FitWindow, envelope: bool) -> CliResult<FitReport> {
    Ok(if envelope { lyapunov_fit_envelope(series, window)? } else { lyapunov_fit(series, window)? })
}

fn fit_entries(series: &OtocSeries, window: FitWindow, envelope: bool) -> CliResult<Vec<(String, Cell)>> {
    let report = fit(series, window, envelope)?;
    let mut entries = vec![
        ("window_lo".to_string(), Cell::Num(report.window.lo)),
        ("window_hi".into(), Cell::Num(report.window.hi)),
        ("slope".into(), Cell::Num(report.slope)),
        ("intercept".into(), Cell::Num(report.intercept)),
        ("rms_residual".into(), Cell::Num(report.rms_residual)),
        ("samples".into(), Cell::Int(report.samples)),
        ("envelope".into(), Cell::Text(report.envelope.to_string())),
    ];
    // shifted windows are reported when the series covers them
    let mut spread: Option<f64> = None;
    for (key, by) in [("slope_shift_minus5", -WINDOW_SHIFT), ("slope_shift_plus5", WINDOW_SHIFT)] {
        let w = window.shifted(by);
        if w.lo < 0.0 || w.hi > series.grid.t_max() + 1e-9 {
            continue;
        }
        if let Ok(shifted) = fit(series, w, envelope) {
            let rel = ((shifted.slope - report.slope) / report.slope).abs();
            spread = Some(spread.map_or(rel, |s| s.max(rel)));
            entries.push((key.into(), Cell::Num(shifted.slope)));
        }
    }
    if let Some(s) = spread {
        entries.push(("shift_relative_spread".into(), Cell::Num(s)));
    }
    // a trend counts only when the change across the window beats the scatter
    let rise = report.slope * (report.window.hi - report.window.lo);
    let trend = if rise.abs() <= TREND_SIGNIFICANCE * report.rms_residual {
        "flat"
    } else if rise > 0.0 {
        "growing"
    } else {
        "decaying"
    };
    entries.push(("trend".into(), Cell::Text(trend.into())));
    Ok(entries)
}

/// `t,value` (or wider) CSV; comment lines and a non-numeric header are skipped.
pub fn read_series(path: &Path) -> CliResult<OtocSeries> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(CliError::Config(format!("{}:{}: expected t,value", path.display(), lineno + 1)));
        };
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(t), Ok(v)) => {
                ts.push(t);
                vs.push(v);
            }
            _ if ts.is_empty() => continue,
            _ => {
                return Err(CliError::Config(format!(
                    "{}:{}: unparsable row {line:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if ts.len() < 2 {
        return Err(CliError::Config(format!("{}: fewer than two samples", path.display())));
    }
    let dt = ts[1] - ts[0];
    let uniform = ts.iter().enumerate().all(|(i, &t)| (t - ts[0] - dt * i as f64).abs() <= 1e-6 * dt.abs().max(1e-12) * (i as f64 + 1.0));
    if !(dt > 0.0) || !uniform || ts[0].abs() > 1e-12 {
        return Err(CliError::Config(format!(
            "{}: times must start at 0 on a uniform grid",
            path.display()
        )));
    }
    Ok(OtocSeries::external(TimeGrid { dt, len: ts.len() }, vs))
}

pub fn lyapunov(ctx: &mut Context, input: Option<&Path>) -> CliResult<Vec<Document>> {
    let args = ctx.args;
    if let Some(path) = input {
        let series = read_series(path)?;
        return Ok(vec![Document::report(fit_entries(&series, args.window, args.envelope)?)]);
    }
    let tmax = args.tmax.unwrap_or(args.window.hi + 2.0 * WINDOW_SHIFT);
    let mut docs = Vec::new();
    let temps = args.temps_or(&[10.0]);
    for &temp in &temps {
        let series = ctx.thermal(args.g, args.order, temp, tmax)?;
        let mut entries = vec![("temperature".to_string(), Cell::Num(temp))];
        entries.extend(fit_entries(&series, args.window, args.envelope)?);
        let doc = Document::report(entries);
        docs.push(if temps.len() > 1 { doc.named(temp_label(temp)) } else { doc });
    }
    Ok(docs)
}

pub fn saturation_rows(ctx: &mut Context, g: f64, order: u8, temps: &[f64], tmax: f64) -> CliResult<Vec<Vec<Cell>>> {
    let mut rows = Vec::new();
    for &temp in temps {
        let series = ctx.thermal(g, order, temp, tmax)?;
        let reference = ctx.reference(g, order, temp)?;
        let report = saturation_stats(&series, ctx.args.tail_fraction)?.with_reference(reference);
        let gap = saturation_vs_reference(&report)?;
        rows.push(vec![
            Cell::Num(temp),
            Cell::Num(report.tail_mean.ln()),
            Cell::Num(reference.ln()),
            Cell::Num(gap),
            Cell::Num(report.tail_mean),
            Cell::Num(report.tail_std),
            Cell::Num(report.drift),
        ]);
    }
    Ok(rows)
}

pub const SATURATION_COLUMNS: [&str; 7] =
    ["T", "ln_tail_mean", "ln_reference", "log_gap", "tail_mean", "tail_std", "drift"];

pub fn saturation(ctx: &mut Context) -> CliResult<Vec<Document>> {
    let args = ctx.args;
    let default: Vec<f64> = (1..=10).map(|k| 5.0 * k as f64).collect();
    let rows = saturation_rows(ctx, args.g, args.order, &args.temps_or(&default), args.tmax_for(args.order))?;
    Ok(vec![Document::table(&SATURATION_COLUMNS, rows)])
}

pub fn oracle_compare(ctx: &mut Context) -> CliResult<Vec<Document>> {
    let args = ctx.args;
    let levels = 6;
    let dim = 40;
    let grid = TimeGrid::new(1.0, 1.0)?;
    let sample = |g: f64| -> CliResult<Vec<(String, f64)>> {
        let params = ModelParams::new(g, args.order)?.with_coefficients(args.coefficients);
        let (ps, px) = perturbative_backend(&params, dim)?;
        let es = diagonalize(&build_hamiltonian(args.oracle_n, g)?, DEFAULT_TOL)?;
        let (os, ox) = oracle_transition_table(&es, default_keep(es.dim))?;
        let mut out = Vec::new();
        for n in 0..levels {
            out.push((format!("E_{n}"), ps.energy(n) - os.energy(n)));
        }
        for (m, n) in [(1, 0), (3, 0), (2, 1), (5, 0), (7, 0)] {
            out.push((format!("x_{m}{n}"), position_element(m, n, &params) - ox.get(m, n)));
        }
        for n in 0..levels {
            let a = microcanonical_otoc(n, &grid, &ps, &px)?.values[1];
            let b = microcanonical_otoc(n, &grid, &os, &ox)?.values[1];
            out.push((format!("c_{n}(t=1)"), a - b));
        }
        Ok(out)
    };
    let full = sample(args.g)?;
    let half = sample(args.g / 2.0)?;
    let target = 2f64.powi(args.order as i32 + 1);
    let rows = full
        .into_iter()
        .zip(half)
        .map(|((name, a), (_, b))| {
            vec![Cell::Text(name), Cell::Num(a.abs()), Cell::Num(b.abs()), Cell::Num(a.abs() / b.abs()), Cell::Num(target)]
        })
        .collect();
    Ok(vec![Document::table(&["quantity", "diff_g", "diff_half_g", "ratio", "target"], rows)])
}

/// Figure data, one named document per file.
pub fn figures(ctx: &mut Context, only: &[String]) -> CliResult<Vec<Document>> {
    const ALL: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];
    for name in only {
        if !ALL.contains(&name.as_str()) {
            return Err(CliError::Config(format!("unknown figure {name:?} (expected fig1..fig6)")));
        }
    }
    let g = ctx.args.g;
    let wanted = |name: &str| only.is_empty() || only.iter().any(|o| o == name);
    let mut docs = Vec::new();
    let thermal_doc = |ctx: &mut Context, name: &str, order: u8, temps: &[f64], tmax: f64| -> CliResult<Document> {
        let mut series = Vec::new();
        for &temp in temps {
            series.push((temp, ctx.thermal(g, order, temp, tmax)?));
        }
        Ok(otoc_documents(&series, true).remove(0).named(name))
    };
    if wanted("fig1") {
        docs.push(thermal_doc(ctx, "fig1", 3, &FIG1_TEMPS, 200.0)?);
    }
    if wanted("fig2") {
        docs.push(thermal_doc(ctx, "fig2", 3, &[20.0], 100.0)?);
    }
    if wanted("fig3") {
        let window = ctx.args.window;
        let tmax = window.hi + 2.0 * WINDOW_SHIFT;
        let mut series = Vec::new();
        for &temp in &FIG3_TEMPS {
            series.push((temp, ctx.thermal(g, 3, temp, tmax)?));
        }
        let mut columns = vec!["t".to_string()];
        columns.extend(FIG3_TEMPS.iter().map(|&t| format!("ln_{}", temp_label(t))));
        let rows = series[0]
            .1
            .times()
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let mut row = vec![Cell::Num(t)];
                row.extend(series.iter().map(|(_, s)| Cell::Num(s.values[i].ln())));
                row
            })
            .collect();
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        docs.push(Document::table(&cols, rows).named("fig3"));
        let t10 = &series[1].1;
        let mut entries = vec![("temperature".to_string(), Cell::Num(10.0))];
        entries.extend(fit_entries(t10, window, true)?);
        docs.push(Document::report(entries).named("fig3_fit"));
    }
    if wanted("fig4") {
        let temps: Vec<f64> = (1..=10).map(|k| 5.0 * k as f64).collect();
        let rows = saturation_rows(ctx, g, 3, &temps, 200.0)?;
        docs.push(Document::table(&SATURATION_COLUMNS, rows).named("fig4"));
    }
    if wanted("fig5") {
        docs.push(thermal_doc(ctx, "fig5", 2, &[20.0], 10000.0)?);
    }
    if wanted("fig6") {
        docs.push(thermal_doc(ctx, "fig6", 2, &[20.0], 1000.0)?);
    }
    Ok(docs)
}
