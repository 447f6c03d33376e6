//! Time and energy series shared by the engines.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complex `A(tau)` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    pub tau: Vec<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(tau: Vec<T>, values: Vec<Complex<T>>) -> Self {
        assert_eq!(tau.len(), values.len());
        Self { tau, values }
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// `|A(tau)|`
    pub fn abs(&self) -> Vec<T> {
        self.values.iter().map(|a| a.norm()).collect()
    }

    /// `C(tau) = |A(tau)|^2`
    pub fn intensity(&self) -> Vec<T> {
        self.values.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Uniform spacing of the grid, or an error when the grid does not start
    /// at zero or is not uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Result<T> {
        uniform_step(&self.tau)
    }
}

/// Real `SP(E)` on an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries<T> {
    pub energy: Vec<T>,
    pub values: Vec<T>,
    /// Gaussian window width in scaled-time units.
    pub sigma: T,
    /// Constant energy shift applied to the transform.
    pub shift: T,
}

/// `start, start + step, ...` up to and including `stop` (within half a step).
pub fn uniform_grid<T: Real>(start: T, stop: T, step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidGrid(format!("start {start}, stop {stop}, step {step}")));
    }
    let n = ((stop - start) / step + T::of(0.5)).floor().to_usize().unwrap_or(0);
    Ok((0..=n).map(|k| start + step * T::of(k as f64)).collect())
}

pub fn uniform_step<T: Real>(tau: &[T]) -> Result<T> {
    if tau.len() < 2 || tau[0] != T::zero() {
        return Err(Error::NonUniformGrid);
    }
    let h = tau[1] - tau[0];
    if !(h > T::zero()) {
        return Err(Error::NonUniformGrid);
    }
    for (k, &t) in tau.iter().enumerate() {
        if (t - h * T::of(k as f64)).abs() > T::of(1e-9) * h * T::of(k.max(1) as f64) {
            return Err(Error::NonUniformGrid);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoint() {
        let g = uniform_grid(0.0f64, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-12);
        assert!(uniform_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn uniform_step_detection() {
        assert!((uniform_step(&[0.0f64, 0.5, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(uniform_step(&[0.0, 0.5, 1.2]), Err(Error::NonUniformGrid));
        assert_eq!(uniform_step(&[0.1, 0.5, 0.9]), Err(Error::NonUniformGrid));
    }
}
