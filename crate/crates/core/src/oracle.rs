//! Exact diagonalization of the truncated Fock-basis Hamiltonian
//! `H = a†a + 1/2 + g (a + a†)^4 / 4`, feeding the shared kernel with an
//! independent spectrum and position table.

use std::io::{self, Write};

use crate::engine::{Spectrum, SpectrumSource, TransitionTable};
use crate::error::{OtocError, Result};
use crate::perturbation::{potential_element, BAND_WIDTH};
use crate::scalar::Scalar;
use crate::series::GSeries;

pub const MIN_DIM: usize = 8;
pub const DEFAULT_DIM: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// Dense symmetric Hamiltonian, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedHamiltonian<S = f64> {
    dim: usize,
    g: S,
    entries: Vec<S>,
}

impl<S: Scalar> TruncatedHamiltonian<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn g(&self) -> S {
        self.g
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries[i * self.dim + j]
    }

    fn max_abs(&self) -> S {
        self.entries.iter().fold(S::zero(), |a, v| a.max(v.abs()))
    }
}

pub fn build_hamiltonian<S: Scalar>(dim: usize, g: S) -> Result<TruncatedHamiltonian<S>> {
    if dim < MIN_DIM {
        return Err(OtocError::TruncationTooSmall { needed: MIN_DIM, available: dim });
    }
    if !(g >= S::zero()) || !g.is_finite() {
        return Err(OtocError::InvalidParameter(format!("coupling must be finite and >= 0, got {g}")));
    }
    let mut entries = vec![S::zero(); dim * dim];
    for i in 0..dim {
        for j in i.saturating_sub(4)..(i + 5).min(dim) {
            let mut v = g * potential_element::<S>(i, j);
            if i == j {
                v += S::from_usize_lossy(i) + S::lit(0.5);
            }
            entries[i * dim + j] = v;
        }
    }
    Ok(TruncatedHamiltonian { dim, g, entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<S = f64> {
    pub eigenvalues: Vec<S>,
    /// Row-major; column `j` is the eigenvector of `eigenvalues[j]`.
    pub vectors: Vec<S>,
    pub dim: usize,
    pub g: S,
    /// Largest off-diagonal magnitude left after the final sweep.
    pub residual: S,
    pub sweeps: usize,
}

impl<S: Scalar> EigenSystem<S> {
    /// Component `i` of eigenvector `j`.
    pub fn vector(&self, i: usize, j: usize) -> S {
        self.vectors[i * self.dim + j]
    }
}

/// Cyclic Jacobi rotations until every off-diagonal entry is below
/// `tol * max(1, |H|_max)`.
pub fn diagonalize<S: Scalar>(h: &TruncatedHamiltonian<S>, tol: S) -> Result<EigenSystem<S>> {
    if !(tol >= S::lit(DEFAULT_TOL)) {
        return Err(OtocError::InvalidParameter(format!(
            "eigensolver tolerance must be >= {DEFAULT_TOL:e}, got {tol}"
        )));
    }
    let n = h.dim;
    let mut a = h.entries.clone();
    let mut v = vec![S::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = S::one();
    }
    let threshold = tol * h.max_abs().max(S::one());
    let off_max = |a: &[S]| {
        let mut m = S::zero();
        for i in 0..n {
            for j in i + 1..n {
                m = m.max(a[i * n + j].abs());
            }
        }
        m
    };

    let mut sweeps = 0;
    let mut residual = off_max(&a);
    while residual >= threshold {
        if sweeps == MAX_SWEEPS {
            return Err(OtocError::NonConvergence {
                sweeps,
                residual: residual.to_f64_lossy(),
            });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < threshold * S::lit(1e-3) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (S::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = S::zero();
                a[q * n + p] = S::zero();
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        residual = off_max(&a);
    }
    log::debug!("jacobi: dim {n}, {sweeps} sweeps, residual {:e}", residual.to_f64_lossy());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&j| a[j * n + j]).collect();
    let mut vectors = vec![S::zero(); n * n];
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = S::zero();
        for i in 0..n {
            let c = v[i * n + src];
            if c.abs() > pivot.abs() {
                pivot = c;
            }
        }
        let sign = if pivot < S::zero() { -S::one() } else { S::one() };
        for i in 0..n {
            vectors[i * n + col] = sign * v[i * n + src];
        }
    }
    Ok(EigenSystem { eigenvalues, vectors, dim: n, g: h.g, residual, sweeps })
}

/// `(A q)_i` for the tridiagonal ladder combination
/// `A_{i,i+1} = upper * sqrt((i+1)/2)`, `A_{i+1,i} = lower * sqrt((i+1)/2)`.
fn ladder_apply<S: Scalar>(es: &EigenSystem<S>, col: usize, upper: S, lower: S) -> Vec<S> {
    let n = es.dim;
    let half = S::lit(0.5);
    (0..n)
        .map(|i| {
            let mut acc = S::zero();
            if i + 1 < n {
                acc += upper * (S::from_usize_lossy(i + 1) * half).sqrt() * es.vector(i + 1, col);
            }
            if i > 0 {
                acc += lower * (S::from_usize_lossy(i) * half).sqrt() * es.vector(i - 1, col);
            }
            acc
        })
        .collect()
}

/// Levels kept by default: the top quarter of the basis is discarded.
pub fn default_keep(dim: usize) -> usize {
    dim - dim / 4
}

/// Oracle spectrum and banded position table on the lowest `keep` levels.
pub fn oracle_transition_table<S: Scalar>(
    es: &EigenSystem<S>,
    keep: usize,
) -> Result<(Spectrum<S>, TransitionTable<S>)> {
    let limit = default_keep(es.dim);
    if keep == 0 || keep > limit {
        return Err(OtocError::InvalidParameter(format!(
            "keep = {keep} must lie in 1..={limit} for an oracle of dimension {}",
            es.dim
        )));
    }
    let xq: Vec<Vec<S>> = (0..keep).map(|j| ladder_apply(es, j, S::one(), S::one())).collect();
    let table = TransitionTable::from_fn(keep, es.g, None, |m, n| {
        let acc = (0..es.dim).fold(S::zero(), |acc, i| acc + es.vector(i, m) * xq[n][i]);
        GSeries::constant(acc)
    });
    let spec = Spectrum::from_values(
        es.eigenvalues[..keep].to_vec(),
        es.g,
        SpectrumSource::Oracle { dim: es.dim },
    );
    Ok((spec, table))
}

/// `<n|x^2|n>` and `<n|p^2|n>` in the oracle eigenbasis.
pub fn oracle_second_moments<S: Scalar>(es: &EigenSystem<S>, n: usize) -> (S, S) {
    let sq = |v: Vec<S>| v.iter().fold(S::zero(), |a, &b| a + b * b);
    // p = i (a† - a) / sqrt 2; |p q|^2 = |(a† - a) q|^2 / 2
    (sq(ladder_apply(es, n, S::one(), S::one())), sq(ladder_apply(es, n, -S::one(), S::one())))
}

/// Writes eigenvalues and transition bands as CSV.
pub fn dump_csv<S: Scalar, W: Write>(
    spec: &Spectrum<S>,
    x: &TransitionTable<S>,
    mut out: W,
) -> io::Result<()> {
    write!(out, "n,energy")?;
    for d in 1..=BAND_WIDTH {
        write!(out, ",x_n_n+{d}")?;
    }
    writeln!(out)?;
    for n in 0..spec.len() {
        write!(out, "{n},{:.16e}", spec.energy(n).to_f64_lossy())?;
        for d in 1..=BAND_WIDTH {
            write!(out, ",{:.16e}", x.get(n, n + d).to_f64_lossy())?;
        }
        writeln!(out)?;
    }
    Ok(())
}
