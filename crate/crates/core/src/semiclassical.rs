//! Phase, prefactor and coherent sum of saddle contributions.
//!
//! A saddle contributes `c^{1/2} e^{i phi}` with
//! `i phi = i S + F_0 + F_tau` and `c = 1 / det D`. The square root is taken
//! on the branch of `arg det D` tracked continuously from `tau = 0`, which
//! takes the place of an explicit Maslov index.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::ComplexTrajectory;
use crate::model::CoherentState;
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Below this `|det D|` a saddle is treated as sitting on a caustic.
pub const CAUSTIC_THRESHOLD: f64 = 1e-14;

/// Everything the coherent sum needs from one saddle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleContribution<T> {
    pub trajectory: ComplexTrajectory<T>,
    /// The full exponent `i phi`, damping included.
    pub phase: Complex<T>,
    /// `c^{1/2}` on the tracked branch.
    pub amplitude: Complex<T>,
    pub f0_minus: Complex<T>,
    pub ftau_plus: Complex<T>,
}

impl<T: Real> SaddleContribution<T> {
    /// `c^{1/2} e^{i phi}`
    pub fn value(&self) -> Complex<T> {
        self.amplitude * self.phase.exp()
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Boundary terms `(F_0^-, F_tau^+)` from the real and imaginary parts of the
/// trajectory end points.
pub fn boundary_terms<T: Real>(traj: &ComplexTrajectory<T>) -> (Complex<T>, Complex<T>) {
    let half = T::of(0.5);
    let term = |q: &[Complex<T>], p: &[Complex<T>], sign: T| {
        let pr: Vec<T> = p.iter().map(|z| z.re).collect();
        let pi: Vec<T> = p.iter().map(|z| z.im).collect();
        let qi: Vec<T> = q.iter().map(|z| z.im).collect();
        Complex::new(
            -half * dot(&pi, &pi) - half * dot(&qi, &qi) + sign * dot(&pr, &qi),
            dot(&pr, &pi),
        )
    };
    (
        term(&traj.z0.q, &traj.z0.p, -T::one()),
        term(&traj.z_tau.q, &traj.z_tau.p, T::one()),
    )
}

/// `c^{1/2} = |det D|^{-1/2} e^{-i arg(det D)/2}` with the tracked argument.
pub fn prefactor<T: Real>(traj: &ComplexTrajectory<T>) -> Result<Complex<T>> {
    let modulus = traj.det_d.norm();
    if !(modulus >= T::of(CAUSTIC_THRESHOLD)) {
        return Err(Error::Caustic(modulus.as_f64()));
    }
    Ok(Complex::from_polar(modulus.powf(T::of(-0.5)), -traj.det_branch_phase * T::of(0.5)))
}

/// `i phi = i S + F_0 + F_tau`
pub fn saddle_phase<T: Real>(traj: &ComplexTrajectory<T>, f0: Complex<T>, ftau: Complex<T>) -> Complex<T> {
    Complex::new(T::zero(), T::one()) * traj.action + f0 + ftau
}

/// Assembles the contribution of one converged saddle.
pub fn contribution<T: Real>(traj: &ComplexTrajectory<T>) -> Result<SaddleContribution<T>> {
    let (f0, ft) = boundary_terms(traj);
    Ok(SaddleContribution {
        phase: saddle_phase(traj, f0, ft),
        amplitude: prefactor(traj)?,
        f0_minus: f0,
        ftau_plus: ft,
        trajectory: traj.clone(),
    })
}

/// Check that the state is one the saddle machinery handles.
pub fn require_real_amplitudes<T: Real>(state: &CoherentState<T>) -> Result<()> {
    if state.is_real() {
        Ok(())
    } else {
        Err(Error::Config(
            "saddle search supports real coherent amplitudes only (e.g. density waves)".into(),
        ))
    }
}

/// Coherent sum over the saddles present at each time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalSeries<T> {
    pub series: TimeSeries<T>,
    /// `|A_sc|^2`
    pub intensity: Vec<T>,
    pub n_saddles: Vec<usize>,
    /// Times at which no saddle was available.
    pub no_saddles: Vec<bool>,
}

/// Sums `contributions[k]` (already in canonical order) at each `tau[k]`.
pub fn semiclassical_autocorrelation<T: Real>(
    tau: &[T],
    contributions: &[Vec<SaddleContribution<T>>],
) -> Result<SemiclassicalSeries<T>> {
    if tau.len() != contributions.len() {
        return Err(Error::InvalidGrid(format!(
            "{} times but {} contribution sets",
            tau.len(),
            contributions.len()
        )));
    }
    let values: Vec<Complex<T>> = contributions
        .iter()
        .map(|set| set.iter().fold(Complex::new(T::zero(), T::zero()), |acc, c| acc + c.value()))
        .collect();
    let series = TimeSeries::new(tau.to_vec(), values);
    Ok(SemiclassicalSeries {
        intensity: series.intensity(),
        series,
        n_saddles: contributions.iter().map(Vec::len).collect(),
        no_saddles: contributions.iter().map(Vec::is_empty).collect(),
    })
}
