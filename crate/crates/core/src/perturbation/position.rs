//! Position matrix elements `x_mn = <m|x|n>` between perturbed eigenstates,
//! and the per-level `<x^2>`, `<p^2>`.

use super::{sqrt_run, CoefficientSet, ModelParams, Rational};
use crate::scalar::Scalar;
use crate::series::GSeries;

/// Largest `|m - n|` with a nonzero third-order `x_mn`.
pub const BAND_WIDTH: usize = 7;

fn series_from_ints<S: Scalar>(coeffs: [i128; 4], prefactor: S) -> GSeries<S> {
    GSeries(coeffs.map(|c| S::from_i128_lossy(c) * prefactor))
}

/// `x_mn` as a third-order series in `g`.
pub fn position_series<S: Scalar>(m: usize, n: usize, set: CoefficientSet) -> GSeries<S> {
    let nn = n as i128;
    let sqrt2 = S::SQRT_2();
    let d64 = S::lit(64.0) * sqrt2;
    let d128 = S::lit(128.0) * sqrt2;
    let d32 = S::lit(32.0) * sqrt2;
    let five_sign: i128 = match set {
        CoefficientSet::Printed => 1,
        CoefficientSet::Corrected => -1,
    };
    match m as i64 - n as i64 {
        7 => series_from_ints([0, 0, 0, 1], sqrt_run::<S>(n, 1, 7) / d64),
        5 => series_from_ints(
            [0, 0, -4 * five_sign, 73 * (nn + 3) * five_sign],
            sqrt_run::<S>(n, 1, 5) / d64,
        ),
        3 => series_from_ints(
            [0, 32, -312 * (nn + 2), 3219 * nn * nn + 12876 * nn + 14041],
            sqrt_run::<S>(n, 1, 3) / d128,
        ),
        1 => series_from_ints(
            [
                32,
                -48 * (nn + 1),
                303 * nn * nn + 606 * nn + 378,
                -3 * (842 * nn * nn * nn + 2526 * nn * nn + 3193 * nn + 1509),
            ],
            sqrt_run::<S>(n, 1, 1) / d32,
        ),
        -1 => series_from_ints(
            [32, -48 * nn, 303 * nn * nn + 75, -3 * nn * (842 * nn * nn + 667)],
            sqrt_run::<S>(n, 0, 0) / d32,
        ),
        -3 => series_from_ints(
            [0, 32, -312 * (nn - 1), 3219 * nn * nn - 6438 * nn + 4384],
            sqrt_run::<S>(n, -2, 0) / d128,
        ),
        -5 => series_from_ints(
            [0, 0, -4 * five_sign, 73 * (nn - 2) * five_sign],
            sqrt_run::<S>(n, -4, 0) / d64,
        ),
        -7 => series_from_ints([0, 0, 0, 1], sqrt_run::<S>(n, -6, 0) / d64),
        _ => GSeries::zero(),
    }
}

/// `x_mn` truncated at `params.order`.
pub fn position_element<S: Scalar>(m: usize, n: usize, params: &ModelParams<S>) -> S {
    position_series::<S>(m, n, params.coefficients)
        .truncate(params.order_index())
        .eval(params.g)
}

fn rational_series<S: Scalar>(c: [Rational; 4]) -> GSeries<S> {
    GSeries(c.map(super::rational_to))
}

fn second_moment_polys(n: usize) -> (Rational, Rational, Rational, Rational) {
    let n = n as i128;
    let r = Rational::from_integer;
    (
        Rational::new(2 * n + 1, 2),
        r(2 * n * n + 2 * n + 1),
        r(34 * n * n * n + 51 * n * n + 59 * n + 21),
        r(125 * n * n * n * n + 250 * n * n * n + 472 * n * n + 347 * n + 111),
    )
}

/// Per-level `<n|x^2|n>` as a series in `g`.
pub fn x2_series<S: Scalar>(n: usize) -> GSeries<S> {
    let (a, b, c, d) = second_moment_polys(n);
    rational_series([
        a,
        b * Rational::new(-3, 2),
        c * Rational::new(5, 8),
        d * Rational::new(-3, 2),
    ])
}

/// Per-level `<n|p^2|n>` as a series in `g`.
pub fn p2_series<S: Scalar>(n: usize) -> GSeries<S> {
    let (a, b, c, d) = second_moment_polys(n);
    rational_series([
        a,
        b * Rational::new(3, 2),
        c * Rational::new(-3, 8),
        d * Rational::new(3, 4),
    ])
}

pub fn x2_expectation<S: Scalar>(n: usize, params: &ModelParams<S>) -> S {
    x2_series::<S>(n).truncate(params.order_index()).eval(params.g)
}

pub fn p2_expectation<S: Scalar>(n: usize, params: &ModelParams<S>) -> S {
    p2_series::<S>(n).truncate(params.order_index()).eval(params.g)
}
