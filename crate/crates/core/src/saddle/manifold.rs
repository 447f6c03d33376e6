use num_complex::Complex;

use crate::error::Result;
use crate::model::{state_to_phase_center, CoherentState};
use crate::phase::{ComplexPhasePoint, PhasePoint, RealPhasePoint};
use crate::scalar::{imag_unit, Real};
use crate::semiclassical::require_real_amplitudes;

/// Initial Lagrangian manifold `q_0 = q_c - i p_0` of a real coherent state,
/// parameterized by the free complex momentum `p_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldParameterization<T> {
    center: Vec<T>,
}

impl<T: Real> ManifoldParameterization<T> {
    pub fn new(state: &CoherentState<T>) -> Result<Self> {
        require_real_amplitudes(state)?;
        Ok(Self {
            center: state_to_phase_center(state).q,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.center.len()
    }

    /// `q_c = sqrt(2) b`
    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn initial_point(&self, p0: &[Complex<T>]) -> ComplexPhasePoint<T> {
        let i = imag_unit::<T>();
        PhasePoint::new(
            self.center.iter().zip(p0).map(|(&c, &p)| Complex::from(c) - i * p).collect(),
            p0.to_vec(),
        )
    }

    /// `r = q_tau - q_c - i p_tau`, zero on the final manifold.
    pub fn residual(&self, z_tau: &ComplexPhasePoint<T>) -> Vec<Complex<T>> {
        let i = imag_unit::<T>();
        z_tau
            .q
            .iter()
            .zip(&z_tau.p)
            .zip(&self.center)
            .map(|((&q, &p), &c)| q - c - i * p)
            .collect()
    }

    /// Manifold momentum whose conjugate coordinate `(q - i p)/sqrt(2)`
    /// equals that of the real point `z`: `p_0 = (p + i (q - q_c)) / 2`.
    pub fn seed_from_real(&self, z: &RealPhasePoint<T>) -> Vec<Complex<T>> {
        let half = T::of(0.5);
        z.q.iter()
            .zip(&z.p)
            .zip(&self.center)
            .map(|((&q, &p), &c)| Complex::new(p * half, (q - c) * half))
            .collect()
    }
}

/// Final-manifold residual of an end point for `state`.
pub fn final_residual<T: Real>(z_tau: &ComplexPhasePoint<T>, state: &CoherentState<T>) -> Result<Vec<Complex<T>>> {
    Ok(ManifoldParameterization::new(state)?.residual(z_tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inf_norm;
    use num_complex::Complex64;

    #[test]
    fn center_is_on_both_manifolds() {
        let state = CoherentState::density_wave(4, 5.0).unwrap();
        let m = ManifoldParameterization::new(&state).unwrap();
        let z = m.initial_point(&[Complex64::new(0.0, 0.0); 4]);
        assert_eq!(z, state_to_phase_center(&state).complexify());
        assert!(inf_norm(&final_residual(&z, &state).unwrap()) == 0.0);
    }

    #[test]
    fn real_off_center_point_has_complex_residual() {
        let state = CoherentState::density_wave(2, 2.0).unwrap();
        let z = RealPhasePoint::new(vec![2.5, 0.1], vec![0.3, -0.2]).complexify();
        let r = final_residual(&z, &state).unwrap();
        assert!(r.iter().all(|x| x.re != 0.0 && x.im != 0.0));
    }

    #[test]
    fn real_seed_matches_conjugate_coordinate() {
        let state = CoherentState::density_wave(2, 3.0).unwrap();
        let m = ManifoldParameterization::new(&state).unwrap();
        let z = RealPhasePoint::new(vec![2.1, -0.4], vec![0.7, 0.2]);
        let zc = m.initial_point(&m.seed_from_real(&z));
        let i = Complex64::new(0.0, 1.0);
        for j in 0..2 {
            let want = Complex64::new(z.q[j], -z.p[j]);
            assert!((zc.q[j] - i * zc.p[j] - want).norm() < 1e-15);
            // and a_0 stays at the state amplitude
            assert!((zc.q[j] + i * zc.p[j] - m.center()[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn complex_amplitudes_are_rejected() {
        let state = CoherentState::new(vec![Complex64::new(1.0, 0.5), Complex64::new(0.0, 0.0)]).unwrap();
        assert!(ManifoldParameterization::new(&state).is_err());
    }
}
