//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line to stderr (uncaptured), then asserts.
//! Lines starting with `  info:` report the corrected coefficient set for
//! comparison; they never affect the verdict.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use otoc_core::analysis::{lyapunov_fit_envelope, saturation_stats, FitWindow};
use otoc_core::engine::{
    appendix_b_diag, b_element, partition_weights, perturbative_backend, sho_backend,
    thermal_otoc, thermal_second_moments, OtocSeries, ThermalParams, TimeGrid,
};
use otoc_core::oracle::{build_hamiltonian, diagonalize, DEFAULT_TOL};
use otoc_core::perturbation::{energy, p2_expectation, x2_expectation};
use otoc_core::{CoefficientSet, ModelParams};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const G: f64 = 1e-3;
const N_MAX: usize = 400;
const DIM: usize = N_MAX + 9;

const SHO_TOL: f64 = 1e-10;
const SHO_BUDGET: Duration = Duration::from_secs(1);
const COMMUTATOR_TOL: f64 = 5e-4;
const COMMUTATOR_BUDGET: Duration = Duration::from_secs(1);
const HERMITICITY_TOL: f64 = 1e-12;
const HERMITICITY_PAIRS: usize = 1000;
const ORDER3_RATIO: (f64, f64) = (8.0, 32.0);
const ORDER2_RATIO: (f64, f64) = (4.0, 16.0);
const ORACLE_N: usize = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
const APPENDIX_RATIO: (f64, f64) = (8.0, 32.0);
/// Residuals at this level are double-precision rounding, where a halving
/// ratio carries no information.
const ROUNDING_FLOOR: f64 = 1e-12;
const RISE_FACTOR: f64 = 3.0;
const PLATEAU_DRIFT: f64 = 0.10;
const FIG1_BUDGET: Duration = Duration::from_secs(300);
const SLOPE_STABILITY: f64 = 0.20;
const LOG_GAP_TOL: f64 = 0.5;
const ORDER_CONTRAST: f64 = 3.0;
const TAIL_FRACTION: f64 = 0.25;

fn report(id: u8, pass: bool, detail: impl AsRef<str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id}: {verdict} {}\n", detail.as_ref());
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn info(detail: impl AsRef<str>) {
    let _ = std::io::stderr().write_all(format!("  info: {}\n", detail.as_ref()).as_bytes());
}

fn params(order: u8, set: CoefficientSet) -> ModelParams {
    ModelParams::new(G, order).unwrap().with_coefficients(set)
}

fn thermal(order: u8, set: CoefficientSet, temp: f64, t_max: f64) -> OtocSeries {
    let (spec, x) = perturbative_backend(&params(order, set), DIM).unwrap();
    let grid = TimeGrid::new(t_max, 0.1).unwrap();
    thermal_otoc(&grid, &spec, &x, &ThermalParams::new(temp).unwrap()).unwrap()
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

#[test]
fn criterion_01_free_oscillator_exactness() {
    let start = Instant::now();
    let (spec, x) = sho_backend::<f64>(DIM);
    let grid = TimeGrid::new(100.0, 0.1).unwrap();
    let mut worst = 0.0f64;
    for temp in [1.0, 10.0, 50.0] {
        let s = thermal_otoc(&grid, &spec, &x, &ThermalParams::new(temp).unwrap()).unwrap();
        for (t, v) in s.times().iter().zip(&s.values) {
            worst = worst.max((v - t.cos().powi(2)).abs());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst < SHO_TOL && elapsed < SHO_BUDGET;
    report(1, pass, format!("max |C_T - cos^2| = {worst:.3e} (< {SHO_TOL:e}), {elapsed:.2?} (< 1 s)"));
    assert!(pass);
}

#[test]
fn criterion_02_commutator_normalization() {
    let start = Instant::now();
    let c0 = thermal(3, CoefficientSet::Printed, 20.0, 0.0).values[0];
    let elapsed = start.elapsed();
    let pass = (c0 - 1.0).abs() < COMMUTATOR_TOL && elapsed < COMMUTATOR_BUDGET;
    report(
        2,
        pass,
        format!("C_T(0) = {c0:.6} at T=20, |C_T(0) - 1| < {COMMUTATOR_TOL:e} required, {elapsed:.2?}"),
    );
    let corrected = thermal(3, CoefficientSet::Corrected, 20.0, 0.0).values[0];
    info(format!("corrected coefficients: C_T(0) = {corrected:.10}"));
    assert!(pass);
}

#[test]
fn criterion_03_hermiticity_and_band() {
    let mut rng = StdRng::seed_from_u64(0x07_0c);
    let mut worst_herm = 0.0f64;
    let mut worst_band = 0.0f64;
    let mut worst_eight = 0.0f64;
    let mut pairs = 0;
    for order in [3u8, 2] {
        let (spec, x) = perturbative_backend(&params(order, CoefficientSet::Printed), 170).unwrap();
        for _ in 0..HERMITICITY_PAIRS {
            let n = rng.gen_range(0..=150usize);
            let m = rng.gen_range(n.saturating_sub(20)..=(n + 20).min(150));
            let t = rng.gen_range(0.0..100.0);
            let a = b_element(n, m, t, &spec, &x).unwrap();
            let b = b_element(m, n, t, &spec, &x).unwrap();
            worst_herm = worst_herm.max((a - b.conj()).norm() / (1.0 + a.norm()));
            let d = m.abs_diff(n);
            if d % 2 == 1 || d > 8 {
                worst_band = worst_band.max(a.norm());
            }
            if order == 2 && d == 8 {
                worst_eight = worst_eight.max(a.norm());
            }
            pairs += 1;
        }
        // the +-8 band, sampled deliberately
        if order == 2 {
            for _ in 0..200 {
                let n = rng.gen_range(0..=142usize);
                let t = rng.gen_range(0.0..100.0);
                worst_eight = worst_eight.max(b_element(n, n + 8, t, &spec, &x).unwrap().norm());
            }
        }
    }
    let pass = worst_herm <= HERMITICITY_TOL && worst_band == 0.0 && worst_eight == 0.0;
    report(
        3,
        pass,
        format!(
            "{pairs} pairs: hermiticity defect {worst_herm:.2e} (<= {HERMITICITY_TOL:e}), \
             off-band max {worst_band:e}, order-2 +-8 band max {worst_eight:e}"
        ),
    );
    assert!(pass);
}

fn energy_ratios(order: u8, set: CoefficientSet) -> Vec<f64> {
    let gap = |g: f64| {
        let es = diagonalize(&build_hamiltonian(ORACLE_N, g).unwrap(), DEFAULT_TOL).unwrap();
        let p = ModelParams::new(g, order).unwrap().with_coefficients(set);
        (0..=5).map(|n| (energy(n, &p) - es.eigenvalues[n]).abs()).collect::<Vec<_>>()
    };
    let a = gap(G);
    let b = gap(G / 2.0);
    a.iter().zip(&b).map(|(x, y)| x / y).collect()
}

#[test]
fn criterion_04_oracle_convergence() {
    let start = Instant::now();
    let third = energy_ratios(3, CoefficientSet::Printed);
    let second = energy_ratios(2, CoefficientSet::Printed);
    let elapsed = start.elapsed();
    let pass = third.iter().all(|&r| in_range(r, ORDER3_RATIO))
        && second.iter().all(|&r| in_range(r, ORDER2_RATIO))
        && elapsed < ORACLE_BUDGET;
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(" ");
    report(
        4,
        pass,
        format!(
            "order 3 ratios [{}] in {ORDER3_RATIO:?}, order 2 ratios [{}] in {ORDER2_RATIO:?}, {elapsed:.2?}",
            fmt(&third),
            fmt(&second)
        ),
    );
    info(format!(
        "corrected coefficients: order 3 ratios [{}]",
        fmt(&energy_ratios(3, CoefficientSet::Corrected))
    ));
    assert!(pass);
}

fn appendix_residual(n: usize, g: f64, order: u8, set: CoefficientSet) -> f64 {
    let p = ModelParams::new(g, order).unwrap().with_coefficients(set);
    let (spec, x) = perturbative_backend(&p, n + 20).unwrap();
    (0..=500)
        .map(|i| {
            let t = 0.1 * i as f64;
            let b = b_element(n, n, t, &spec, &x).unwrap();
            let a = appendix_b_diag(n, t, g, order).unwrap();
            (b.re - a).abs().max(b.im.abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn criterion_05_appendix_equivalence() {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for n in [0usize, 1, 5] {
        for g in [1e-3, 5e-3] {
            let a = appendix_residual(n, g, 3, CoefficientSet::Printed);
            let b = appendix_residual(n, g / 2.0, 3, CoefficientSet::Printed);
            worst = worst.max(a);
            let ok = (a <= ROUNDING_FLOOR && b <= ROUNDING_FLOOR) || in_range(a / b, APPENDIX_RATIO);
            if !ok {
                parts.push(format!("n={n} g={g}: {a:.2e} -> {b:.2e}"));
            }
            pass &= ok;
        }
    }
    report(
        5,
        pass,
        format!(
            "max_t |b_nn - appendix| <= {worst:.2e} over n in {{0,1,5}}, g in {{1e-3,5e-3}} \
             (rounding floor {ROUNDING_FLOOR:e}, else halving ratio in {APPENDIX_RATIO:?}){}",
            if parts.is_empty() { String::new() } else { format!("; failing: {}", parts.join(", ")) }
        ),
    );
    let a = appendix_residual(5, 1e-3, 3, CoefficientSet::Corrected);
    let b = appendix_residual(5, 5e-4, 3, CoefficientSet::Corrected);
    info(format!(
        "corrected coefficients: n=5 residual {a:.2e} -> {b:.2e} (ratio {:.2}), the printed closed form carries the printed third-order energies",
        a / b
    ));
    assert!(pass);
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn criterion_06_figure_one_shape() {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for temp in [10.0, 20.0, 40.0] {
        let s = thermal(3, CoefficientSet::Printed, temp, 200.0);
        let early = mean(&s.values[..=50]);
        let peak = s.values[51..].iter().copied().fold(f64::MIN, f64::max);
        let sat = saturation_stats(&s, TAIL_FRACTION).unwrap();
        let ok = peak > RISE_FACTOR * early && sat.drift < PLATEAU_DRIFT;
        pass &= ok;
        parts.push(format!(
            "T={temp}: peak/early = {:.2}, plateau/early = {:.2}, drift = {:.4}",
            peak / early,
            sat.tail_mean / early,
            sat.drift
        ));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < FIG1_BUDGET;
    report(
        6,
        pass,
        format!(
            "{} (need peak/early > {RISE_FACTOR}, drift < {PLATEAU_DRIFT}), {elapsed:.2?}",
            parts.join("; ")
        ),
    );
    for temp in [10.0, 20.0, 40.0] {
        let s = thermal(3, CoefficientSet::Corrected, temp, 200.0);
        let early = mean(&s.values[..=50]);
        let sat = saturation_stats(&s, TAIL_FRACTION).unwrap();
        info(format!(
            "corrected coefficients T={temp}: plateau/early = {:.2}, drift = {:.4}",
            sat.tail_mean / early,
            sat.drift
        ));
    }
    assert!(pass);
}

fn window_slopes(set: CoefficientSet) -> [f64; 3] {
    let s = thermal(3, set, 10.0, 60.0);
    let w = FitWindow::new(20.0, 50.0).unwrap();
    [w.shifted(-5.0), w, w.shifted(5.0)].map(|w| lyapunov_fit_envelope(&s, w).unwrap().slope)
}

#[test]
fn criterion_07_lyapunov_window() {
    let [minus, base, plus] = window_slopes(CoefficientSet::Printed);
    let spread = ((minus - base) / base).abs().max(((plus - base) / base).abs());
    let pass = base > 0.0 && spread <= SLOPE_STABILITY;
    report(
        7,
        pass,
        format!(
            "T=10 envelope slopes [15,45] {minus:.4} / [20,50] {base:.4} / [25,55] {plus:.4}, \
             relative spread {spread:.3} (<= {SLOPE_STABILITY})"
        ),
    );
    let [m, b, p] = window_slopes(CoefficientSet::Corrected);
    let s = ((m - b) / b).abs().max(((p - b) / b).abs());
    info(format!("corrected coefficients: slopes {m:.4} / {b:.4} / {p:.4}, spread {s:.3}"));
    assert!(pass);
}

fn log_gaps(set: CoefficientSet) -> Vec<(f64, f64)> {
    let p = params(3, set);
    let (spec, _) = perturbative_backend(&p, DIM).unwrap();
    [10.0, 20.0, 40.0]
        .iter()
        .map(|&temp| {
            let s = thermal(3, set, temp, 200.0);
            let tp = ThermalParams::new(temp).unwrap();
            let (x2, p2) = thermal_second_moments(
                &spec,
                &tp,
                |n| x2_expectation(n, &p),
                |n| p2_expectation(n, &p),
            )
            .unwrap();
            let sat = saturation_stats(&s, TAIL_FRACTION).unwrap().with_reference(2.0 * x2 * p2);
            (temp, otoc_core::analysis::saturation_vs_reference(&sat).unwrap())
        })
        .collect()
}

#[test]
fn criterion_08_saturation_identity() {
    let gaps = log_gaps(CoefficientSet::Printed);
    let hi = gaps.iter().map(|g| g.1).fold(f64::MIN, f64::max);
    let lo = gaps.iter().map(|g| g.1).fold(f64::MAX, f64::min);
    // "roughly uniform": the spread across T stays within the same tolerance
    let pass = hi < LOG_GAP_TOL && hi - lo < LOG_GAP_TOL;
    let fmt = |g: &[(f64, f64)]| g.iter().map(|(t, v)| format!("T={t}: {v:.3}")).collect::<Vec<_>>().join(", ");
    report(8, pass, format!("log gaps {} (each < {LOG_GAP_TOL}, spread {:.3})", fmt(&gaps), hi - lo));
    info(format!("corrected coefficients: log gaps {}", fmt(&log_gaps(CoefficientSet::Corrected))));
    assert!(pass);
}

#[test]
fn criterion_09_order_contrast() {
    let third = saturation_stats(&thermal(3, CoefficientSet::Printed, 20.0, 200.0), TAIL_FRACTION)
        .unwrap()
        .drift;
    let second = saturation_stats(&thermal(2, CoefficientSet::Printed, 20.0, 1000.0), TAIL_FRACTION)
        .unwrap()
        .drift;
    let pass = second >= ORDER_CONTRAST * third;
    report(
        9,
        pass,
        format!("order-2 drift (t=1000) {second:.4} vs order-3 drift (t=200) {third:.4}, need >= {ORDER_CONTRAST}x"),
    );
    let corrected = saturation_stats(&thermal(3, CoefficientSet::Corrected, 20.0, 200.0), TAIL_FRACTION)
        .unwrap()
        .drift;
    info(format!("corrected coefficients: order-3 drift {corrected:.4}"));
    let (spec, _) = perturbative_backend(&params(3, CoefficientSet::Printed), DIM).unwrap();
    info(format!(
        "retained levels at T=20: {}",
        partition_weights(&spec, &ThermalParams::new(20.0).unwrap()).retained()
    ));
    assert!(pass);
}

fn run_figures(dir: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_otoc"))
        .args(["figures", "--out"])
        .arg(dir)
        .env("RUST_LOG", "error")
        .status()
        .expect("otoc binary runs");
    assert!(status.success(), "figures exited with {status}");
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_determinism() {
    // both runs share one --out path, since the header records it
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_figures");
    let _ = fs::remove_dir_all(&dir);
    run_figures(&dir);
    let first = snapshot(&dir);
    fs::remove_dir_all(&dir).unwrap();
    run_figures(&dir);
    let second = snapshot(&dir);
    let differing: Vec<_> = first
        .iter()
        .filter(|(name, bytes)| !second.iter().any(|(n, b)| n == name && b == bytes))
        .map(|(name, _)| name.as_str())
        .collect();
    let pass = !first.is_empty() && differing.is_empty() && first.len() == second.len();
    report(
        10,
        pass,
        format!(
            "{} figure files compared byte for byte, {} differ{}",
            first.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(": {}", differing.join(", ")) }
        ),
    );
    assert!(pass);
}
