//! Power series in the coupling `g`, truncated at third order.

use std::ops::{Add, Neg, Sub};

use crate::scalar::Scalar;

/// Highest power of `g` carried by any perturbative quantity.
pub const MAX_ORDER: usize = 3;

/// Coefficients `[c0, c1, c2, c3]` of `c0 + c1 g + c2 g^2 + c3 g^3`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GSeries<S>(pub [S; MAX_ORDER + 1]);

impl<S: Scalar> GSeries<S> {
    pub fn zero() -> Self {
        Self([S::zero(); MAX_ORDER + 1])
    }

    pub fn constant(c0: S) -> Self {
        let mut c = [S::zero(); MAX_ORDER + 1];
        c[0] = c0;
        Self(c)
    }

    pub fn coeff(&self, power: usize) -> S {
        self.0[power]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    /// Drops every power above `order`.
    pub fn truncate(mut self, order: usize) -> Self {
        for c in self.0.iter_mut().skip(order + 1) {
            *c = S::zero();
        }
        self
    }

    pub fn scale(mut self, factor: S) -> Self {
        for c in self.0.iter_mut() {
            *c *= factor;
        }
        self
    }

    /// Cauchy product keeping powers up to `order`.
    pub fn mul_truncated(&self, other: &Self, order: usize) -> Self {
        let order = order.min(MAX_ORDER);
        let mut out = [S::zero(); MAX_ORDER + 1];
        for (p, slot) in out.iter_mut().enumerate().take(order + 1) {
            let mut acc = S::zero();
            for i in 0..=p {
                acc += self.0[i] * other.0[p - i];
            }
            *slot = acc;
        }
        Self(out)
    }

    /// Horner evaluation at coupling `g`.
    pub fn eval(&self, g: S) -> S {
        self.0.iter().rev().fold(S::zero(), |acc, &c| acc * g + c)
    }
}

impl<S: Scalar> Add for GSeries<S> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<S: Scalar> Sub for GSeries<S> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<S: Scalar> Neg for GSeries<S> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for a in self.0.iter_mut() {
            *a = -*a;
        }
        self
    }
}
