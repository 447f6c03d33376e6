//! Phase-space points in quadrature variables, `a = (q + i p) / sqrt(2)`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::{PhaseElem, Real};

/// A point `(q, p)` with `n_sites` entries in each half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<E> {
    pub q: Vec<E>,
    pub p: Vec<E>,
}

pub type RealPhasePoint<T> = PhasePoint<T>;
pub type ComplexPhasePoint<T> = PhasePoint<Complex<T>>;

impl<E: Copy> PhasePoint<E> {
    pub fn new(q: Vec<E>, p: Vec<E>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        Self { q, p }
    }

    pub fn n_sites(&self) -> usize {
        self.q.len()
    }

    /// Concatenated `(q, p)`.
    pub fn to_vec(&self) -> Vec<E> {
        self.q.iter().chain(self.p.iter()).copied().collect()
    }

    pub fn from_slice(y: &[E], n_sites: usize) -> Self {
        Self {
            q: y[..n_sites].to_vec(),
            p: y[n_sites..2 * n_sites].to_vec(),
        }
    }
}

impl<T: Real> PhasePoint<T> {
    pub fn zeros(n_sites: usize) -> Self {
        Self {
            q: vec![T::zero(); n_sites],
            p: vec![T::zero(); n_sites],
        }
    }

    pub fn complexify(&self) -> ComplexPhasePoint<T> {
        PhasePoint {
            q: self.q.iter().map(|&x| Complex::from(x)).collect(),
            p: self.p.iter().map(|&x| Complex::from(x)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|x| x.is_finite())
    }
}

impl<T: Real> PhasePoint<Complex<T>> {
    pub fn real_part(&self) -> RealPhasePoint<T> {
        PhasePoint {
            q: self.q.iter().map(|z| z.re).collect(),
            p: self.p.iter().map(|z| z.re).collect(),
        }
    }

    pub fn imag_part(&self) -> RealPhasePoint<T> {
        PhasePoint {
            q: self.q.iter().map(|z| z.im).collect(),
            p: self.p.iter().map(|z| z.im).collect(),
        }
    }
}

/// Largest coordinate magnitude.
pub fn max_magnitude<T: Real, E: PhaseElem<T>>(y: &[E]) -> T {
    y.iter().fold(T::zero(), |m, &x| m.max(x.magnitude()))
}
