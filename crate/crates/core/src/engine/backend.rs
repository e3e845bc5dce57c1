use crate::error::{OtocError, Result};
use crate::perturbation::{energy_series, position_series, ModelParams};
use crate::scalar::Scalar;
use crate::series::GSeries;

use super::{Spectrum, SpectrumSource, TransitionTable};

/// Closed-form perturbative spectrum and position table on levels `0..dim`.
pub fn perturbative_backend<S: Scalar>(
    params: &ModelParams<S>,
    dim: usize,
) -> Result<(Spectrum<S>, TransitionTable<S>)> {
    params.validate()?;
    if dim == 0 {
        return Err(OtocError::InvalidParameter("backend dimension must be > 0".into()));
    }
    let set = params.coefficients;
    let spec = Spectrum::from_series(
        (0..dim).map(|n| energy_series(n, set)).collect(),
        params.g,
        params.order,
        SpectrumSource::Perturbative { order: params.order, coefficients: set },
    );
    let x = TransitionTable::from_fn(dim, params.g, Some(params.order), |m, n| {
        position_series(m, n, set)
    });
    Ok((spec, x))
}

/// Free oscillator: `E_n = n + 1/2`, `x_{n,n+1} = sqrt((n+1)/2)`.
pub fn sho_backend<S: Scalar>(dim: usize) -> (Spectrum<S>, TransitionTable<S>) {
    let half = S::lit(0.5);
    let spec = Spectrum::from_values(
        (0..dim).map(|n| S::from_usize_lossy(n) + half).collect(),
        S::zero(),
        SpectrumSource::Sho,
    );
    let x = TransitionTable::from_fn(dim, S::zero(), None, |m, n| {
        if m.abs_diff(n) == 1 {
            GSeries::constant((S::from_usize_lossy(m.max(n)) * half).sqrt())
        } else {
            GSeries::zero()
        }
    });
    (spec, x)
}
