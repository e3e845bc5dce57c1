//! Perturbed eigenstates `|n>^(j) = sum_k f_j(n,k) |n+k>^(0)`.

use serde::{Deserialize, Serialize};

use super::{check_order, sqrt_run, CoefficientSet};
use crate::error::{OtocError, Result};
use crate::scalar::Scalar;

const OFFSETS_1: &[i64] = &[-4, -2, 2, 4];
const OFFSETS_2: &[i64] = &[-8, -6, -4, -2, 0, 2, 4, 6, 8];
const OFFSETS_3: &[i64] = &[-12, -10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10, 12];

/// Offsets `k` that may carry a nonzero `f_j(n, k)`.
pub fn allowed_offsets(j: u8) -> Result<&'static [i64]> {
    match j {
        1 => Ok(OFFSETS_1),
        2 => Ok(OFFSETS_2),
        3 => Ok(OFFSETS_3),
        other => Err(OtocError::OrderOutOfRange(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCoefficientTable<S = f64> {
    pub n: usize,
    pub order: u8,
    /// `(k, f_j(n, k))` for every allowed offset, ascending in `k`.
    pub entries: Vec<(i64, S)>,
}

impl<S: Scalar> StateCoefficientTable<S> {
    pub fn get(&self, k: i64) -> S {
        self.entries
            .iter()
            .find(|(off, _)| *off == k)
            .map(|(_, c)| *c)
            .unwrap_or_else(S::zero)
    }
}

/// Rational part of `f_j(n, k)`: `numerator(n) / denominator`, multiplying
/// the guarded square-root run that connects `n` to `n + k`.
fn rational_part(n: i128, j: u8, k: i64) -> (i128, i128) {
    match (j, k) {
        (1, -4) => (1, 16),
        (1, -2) => (2 * n - 1, 4),
        (1, 2) => (-(2 * n + 3), 4),
        (1, 4) => (-1, 16),

        (2, -8) => (1, 512),
        (2, -6) => (6 * n - 11, 192),
        (2, -4) => ((n - 1) * (2 * n - 7), 16),
        (2, -2) => (n * (n * (2 * n + 129) - 107) + 66, 64),
        (2, 0) => (-(n * (n + 1) * (65 * n * (n + 1) + 422) + 156), 256),
        (2, 2) => (n * (n * (123 - 2 * n) + 359) + 300, 64),
        (2, 4) => ((n + 2) * (2 * n + 9), 16),
        (2, 6) => (6 * n + 17, 192),
        (2, 8) => (1, 512),

        (3, -12) => (1, 24576),
        (3, -10) => (6 * n - 19, 6144),
        (3, -8) => ((n - 2) * (6 * n - 31), 768),
        (3, -6) => (n * (n * (122 * n - 2283) + 6217) - 5466, 6144),
        (3, -4) => (
            -(n * (n * (n * (387 * n + 23278) - 112959) + 166670) - 98496),
            24576,
        ),
        (3, -2) => (
            n * (n * (n * (n * (1175 - 198 * n) + 35372) - 40127) + 56650) - 14412,
            3072,
        ),
        (3, 0) => (
            3 * (2 * n + 1) * (n * (n + 1) * (89 * n * (n + 1) + 970) + 744),
            256,
        ),
        (3, 2) => (
            n * (n * (n * (n * (198 * n + 2165) - 28692) - 137213) - 237330) - 145188,
            3072,
        ),
        (3, 4) => (
            n * (n * (n * (387 * n - 21730) - 180471) - 460874) - 401016,
            24576,
        ),
        (3, 6) => (-(n * (n * (122 * n + 2649) + 11149) + 14088), 6144),
        (3, 8) => (-(n + 3) * (6 * n + 37), 768),
        (3, 10) => (-(6 * n + 25), 6144),
        (3, 12) => (-1, 24576),
        _ => (0, 1),
    }
}

fn coefficient<S: Scalar>(n: usize, j: u8, k: i64, set: CoefficientSet) -> S {
    if (n as i64) + k < 0 {
        return S::zero();
    }
    let run = if k > 0 {
        sqrt_run::<S>(n, 1, k)
    } else if k < 0 {
        sqrt_run::<S>(n, k + 1, 0)
    } else {
        S::one()
    };
    if run.is_zero() {
        return S::zero();
    }
    let (mut num, den) = rational_part(n as i128, j, k);
    if set == CoefficientSet::Corrected && j == 2 && k == -2 {
        num = -num;
    }
    run * S::from_i128_lossy(num) / S::from_i128_lossy(den)
}

/// Coefficients `f_j(n, k)` of the `j`-th order state correction.
pub fn state_coefficients<S: Scalar>(
    n: usize,
    j: u8,
    set: CoefficientSet,
) -> Result<StateCoefficientTable<S>> {
    check_order(j)?;
    let offsets = allowed_offsets(j)?;
    let entries = offsets
        .iter()
        .map(|&k| (k, coefficient::<S>(n, j, k, set)))
        .collect();
    Ok(StateCoefficientTable { n, order: j, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_order_ground_state() {
        let t = state_coefficients::<f64>(0, 1, CoefficientSet::Printed).unwrap();
        assert_relative_eq!(t.get(2), -3.0 * 2f64.sqrt() / 4.0, epsilon = 1e-15);
        assert_relative_eq!(t.get(4), -(24f64.sqrt()) / 16.0, epsilon = 1e-15);
        assert_eq!(t.get(-2), 0.0);
        assert_eq!(t.get(-4), 0.0);
    }

    #[test]
    fn second_order_diagonal() {
        let t = state_coefficients::<f64>(0, 2, CoefficientSet::Printed).unwrap();
        assert_eq!(t.get(0), -156.0 / 256.0);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(state_coefficients::<f64>(3, 0, CoefficientSet::Printed).is_err());
        assert!(state_coefficients::<f64>(3, 4, CoefficientSet::Printed).is_err());
    }

    #[test]
    fn offsets_respect_order_sets() {
        for j in 1..=3u8 {
            let t = state_coefficients::<f64>(20, j, CoefficientSet::Printed).unwrap();
            let max = 4 * j as i64;
            assert!(t.entries.iter().all(|(k, _)| k.abs() <= max && k % 2 == 0));
            assert_eq!(t.entries.len(), allowed_offsets(j).unwrap().len());
        }
    }

    #[test]
    fn low_levels_never_reach_below_ground() {
        for n in 0..13usize {
            for j in 1..=3u8 {
                for set in [CoefficientSet::Printed, CoefficientSet::Corrected] {
                    let t = state_coefficients::<f64>(n, j, set).unwrap();
                    for (k, c) in &t.entries {
                        assert!(c.is_finite());
                        if (n as i64) + k < 0 {
                            assert_eq!(*c, 0.0, "n={n} j={j} k={k}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn corrected_set_flips_only_second_order_minus_two() {
        for n in [2usize, 5, 11] {
            for j in 1..=3u8 {
                let p = state_coefficients::<f64>(n, j, CoefficientSet::Printed).unwrap();
                let c = state_coefficients::<f64>(n, j, CoefficientSet::Corrected).unwrap();
                for ((k, a), (_, b)) in p.entries.iter().zip(&c.entries) {
                    if j == 2 && *k == -2 {
                        assert_eq!(*a, -*b);
                    } else {
                        assert_eq!(a, b);
                    }
                }
            }
        }
    }
}
