//! Printed closed form of the diagonal kernel `b_nn(t)`, used only as an
//! independent target for the generic kernel.

use crate::error::Result;
use crate::perturbation::check_order;
use crate::scalar::Scalar;
use crate::series::GSeries;

fn series<S: Scalar>(c: [i128; 4]) -> GSeries<S> {
    GSeries(c.map(S::from_i128_lossy))
}

/// Amplitudes `f_j` and frequencies `h_j`, each scaled by 128.
fn terms<S: Scalar>(n: usize) -> [(GSeries<S>, GSeries<S>); 4] {
    let n = n as i128;
    let n2 = n * n;
    let up = (n + 1) * (n + 2) * (n + 3);
    let down = n * (n2 - 3 * n + 2);
    [
        (
            series([-128 * n, 0, 72 * n * (n2 + 1), -n2 * (585 * n2 * n2 + 4370 * n2 + 5509)]),
            series([128, 384 * n, -96 * (17 * n2 + 7), n * (585 * n2 * n2 + 15182 * n2 + 18601)]),
        ),
        (
            series([0, 0, 24 * up, -396 * up * (n + 2)]),
            series([
                128,
                384 * (n + 2),
                -32 * (51 * n2 + 204 * n + 259),
                585 * n2 * n2 * n + 5850 * n2 * n2 + 42482 * n2 * n + 161292 * n2 + 326699 * n
                    + 273206,
            ])
            .scale(S::lit(3.0)),
        ),
        (
            series([0, 0, -24 * down, 396 * down * (n - 1)]),
            series([
                128,
                384 * (n - 1),
                -32 * (51 * n2 - 102 * n + 106),
                585 * n2 * n2 * n - 2925 * n2 * n2 + 24932 * n2 * n - 63096 * n2 + 111086 * n
                    - 70582,
            ])
            .scale(S::lit(3.0)),
        ),
        (
            series([
                128 * (n + 1),
                0,
                -72 * (n + 1) * (n2 + 2 * n + 2),
                (n + 1)
                    * (585 * n2 * n2 * n + 2925 * n2 * n2 + 10220 * n2 * n + 18960 * n2
                        + 21544 * n
                        + 10464),
            ]),
            series([
                128,
                384 * (n + 1),
                -96 * (17 * n2 + 34 * n + 24),
                585 * n2 * n2 * n + 2925 * n2 * n2 + 21032 * n2 * n + 51396 * n2 + 67072 * n
                    + 34368,
            ]),
        ),
    ]
}

/// `sum_j f_j(n, g) cos(t h_j(n, g))` with both `f_j` and `h_j` cut at
/// `g^order`.
pub fn appendix_b_diag<S: Scalar>(n: usize, t: S, g: S, order: u8) -> Result<S> {
    check_order(order)?;
    let scale = S::lit(128.0);
    let cut = order as usize;
    Ok(terms::<S>(n)
        .iter()
        .map(|(f, h)| {
            let amp = f.truncate(cut).eval(g) / scale;
            let freq = h.truncate(cut).eval(g) / scale;
            amp * (t * freq).cos()
        })
        .fold(S::zero(), |a, b| a + b))
}
