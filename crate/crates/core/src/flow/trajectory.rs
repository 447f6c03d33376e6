//! Trajectories of the (complexified) mean-field flow together with their
//! action and stability matrix.

use std::cell::RefCell;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{flow_rhs_into, hamiltonian_value, jacobian_times};
use super::rk::{dopri5, RkFailure, StepControl, Verdict};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{CoherentState, LatticeConfig};
use crate::phase::{max_magnitude, ComplexPhasePoint, PhasePoint, RealPhasePoint};
use crate::scalar::{imag_unit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_step: T,
    /// Escape is declared once any `|q_j|` or `|p_j|` exceeds this bound.
    pub escape_bound: T,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::of(1e-10),
            atol: T::of(1e-12),
            max_step: T::infinity(),
            escape_bound: T::of(1e4),
            max_steps: 1_000_000,
        }
    }
}

impl<T: Real> IntegratorOptions<T> {
    /// Defaults with the escape bound `1e3 * sqrt(2 max n_j)`.
    pub fn for_state(state: &CoherentState<T>) -> Self {
        let nmax = state.max_occupation().max(T::one());
        Self {
            escape_bound: T::of(1e3) * (T::of(2.0) * nmax).sqrt(),
            ..Self::default()
        }
    }

    fn control(&self) -> StepControl<T> {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

/// The `2N x 2N` linearized flow map `d(q_t, p_t) / d(q_0, p_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMatrix<T> {
    n_sites: usize,
    m: CMatrix<T>,
}

impl<T: Real> StabilityMatrix<T> {
    pub fn identity(n_sites: usize) -> Self {
        Self {
            n_sites,
            m: CMatrix::identity(2 * n_sites),
        }
    }

    pub fn from_matrix(n_sites: usize, m: CMatrix<T>) -> Self {
        assert_eq!(m.dim(), 2 * n_sites);
        Self { n_sites, m }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    fn block(&self, bi: usize, bj: usize) -> CMatrix<T> {
        let n = self.n_sites;
        CMatrix::from_fn(n, |i, j| self.m[(bi * n + i, bj * n + j)])
    }

    /// `dq_t / dq_0`
    pub fn m11(&self) -> CMatrix<T> {
        self.block(0, 0)
    }

    /// `dq_t / dp_0`
    pub fn m12(&self) -> CMatrix<T> {
        self.block(0, 1)
    }

    /// `dp_t / dq_0`
    pub fn m21(&self) -> CMatrix<T> {
        self.block(1, 0)
    }

    /// `dp_t / dp_0`
    pub fn m22(&self) -> CMatrix<T> {
        self.block(1, 1)
    }

    /// `max |M^T Omega M - Omega|` with `Omega = [[0, 1], [-1, 0]]`.
    pub fn symplectic_defect(&self) -> T {
        let d = 2 * self.n_sites;
        let n = self.n_sites;
        let omega = CMatrix::from_fn(d, |i, j| {
            if j == i + n {
                Complex::new(T::one(), T::zero())
            } else if i == j + n {
                Complex::new(-T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        });
        let lhs = &(&self.m.transpose() * &omega) * &self.m;
        (&lhs - &omega).max_abs()
    }

    /// `D = (M11 + M22 + i (M12 - M21)) / 2`, the derivative of the final
    /// manifold coordinate `(q_t - i p_t)/sqrt(2)` with respect to the free
    /// initial coordinate `(q_0 - i p_0)/sqrt(2)` at fixed `(q_0 + i p_0)`.
    /// Its determinant sets the semiclassical prefactor and it is, up to a
    /// factor `-2i`, the Newton Jacobian of the saddle condition.
    pub fn prefactor_matrix(&self) -> CMatrix<T> {
        prefactor_from(self.n_sites, |r, c| self.m[(r, c)])
    }
}

fn prefactor_from<T: Real>(n: usize, m: impl Fn(usize, usize) -> Complex<T>) -> CMatrix<T> {
    let half = T::of(0.5);
    let i = imag_unit::<T>();
    CMatrix::from_fn(n, |j, k| (m(j, k) + m(n + j, n + k) + i * (m(j, n + k) - m(n + j, k))) * half)
}

/// A complexified mean-field trajectory from `z0` run for scaled time `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexTrajectory<T> {
    pub z0: ComplexPhasePoint<T>,
    pub z_tau: ComplexPhasePoint<T>,
    pub tau: T,
    /// `int (p . dq/dt - H) dt` along the path.
    pub action: Complex<T>,
    pub stability: StabilityMatrix<T>,
    /// `det D` at `tau`.
    pub det_d: Complex<T>,
    /// Continuously tracked `arg det D` from `tau = 0`.
    pub det_branch_phase: T,
    /// Largest change of `arg det D` over a single accepted step.
    pub max_branch_step: T,
}

impl<T: Real> ComplexTrajectory<T> {
    pub fn n_sites(&self) -> usize {
        self.z0.n_sites()
    }

    /// Energy at the initial point; conserved along the flow.
    pub fn energy(&self, config: &LatticeConfig<T>) -> Complex<T> {
        hamiltonian_value(&self.z0, config)
    }
}

fn diverged<T: Real>(f: RkFailure<T>) -> Error {
    Error::TrajectoryDiverged {
        escape_time: f.time().as_f64(),
    }
}

struct BranchTrack<T> {
    prev: Complex<T>,
    phase: T,
    max_step: T,
    history: Vec<(T, Complex<T>, T, T)>,
}

/// Integrates flow, action and variational equations from `z0` for time
/// `tau_end` (negative values run backwards).
pub fn integrate<T: Real>(
    z0: &ComplexPhasePoint<T>,
    tau_end: T,
    config: &LatticeConfig<T>,
    opts: &IntegratorOptions<T>,
) -> Result<ComplexTrajectory<T>> {
    Ok(integrate_checkpoints(z0, &[tau_end], config, opts)?.pop().expect("one checkpoint"))
}

/// Like [`integrate`], returning the trajectory truncated at each checkpoint.
pub fn integrate_checkpoints<T: Real>(
    z0: &ComplexPhasePoint<T>,
    checkpoints: &[T],
    config: &LatticeConfig<T>,
    opts: &IntegratorOptions<T>,
) -> Result<Vec<ComplexTrajectory<T>>> {
    let n = config.n_sites();
    if z0.n_sites() != n {
        return Err(Error::Config("phase point does not match the lattice".into()));
    }
    let d = 2 * n;
    let s_off = d;
    let m_off = d + 1;
    let mut y0 = z0.to_vec();
    y0.push(Complex::new(T::zero(), T::zero()));
    let ident = CMatrix::<T>::identity(d);
    y0.extend_from_slice(ident.as_slice());

    let rhs = |_t: T, y: &[Complex<T>], dy: &mut [Complex<T>]| {
        let (head, m) = y.split_at(m_off);
        let (dhead, dm) = dy.split_at_mut(m_off);
        flow_rhs_into(config, &head[..d], &mut dhead[..d]);
        let z = PhasePoint::from_slice(&head[..d], n);
        let lagr: Complex<T> = z.p.iter().zip(&dhead[..n]).map(|(&p, &qd)| p * qd).sum::<Complex<T>>()
            - hamiltonian_value(&z, config);
        dhead[s_off] = lagr;
        jacobian_times(config, &head[..d], m, dm);
    };

    let det_of = |y: &[Complex<T>]| prefactor_from(n, |r, c| y[m_off + r * d + c]).det();

    let track = RefCell::new(BranchTrack {
        prev: Complex::new(T::one(), T::zero()),
        phase: T::zero(),
        max_step: T::zero(),
        history: Vec::new(),
    });
    let bound = opts.escape_bound;
    let observe = |t: T, y: &[Complex<T>]| {
        if max_magnitude::<T, _>(&y[..d]) > bound {
            return Verdict::Escape;
        }
        let det = det_of(y);
        let mut tr = track.borrow_mut();
        let step = if det.norm() == T::zero() || tr.prev.norm() == T::zero() {
            T::zero()
        } else {
            (det / tr.prev).arg()
        };
        if step.abs() > T::FRAC_PI_2() {
            return Verdict::Shrink;
        }
        tr.phase += step;
        tr.max_step = tr.max_step.max(step.abs());
        tr.prev = det;
        let (phase, max_step) = (tr.phase, tr.max_step);
        tr.history.push((t, det, phase, max_step));
        Verdict::Accept
    };

    let states = dopri5(rhs, T::zero(), &y0, checkpoints, &opts.control(), observe).map_err(diverged)?;
    let track = track.into_inner();
    let mut cursor = 0usize;
    let mut out = Vec::with_capacity(checkpoints.len());
    for (y, &tau) in states.iter().zip(checkpoints) {
        let mut branch = (Complex::new(T::one(), T::zero()), T::zero(), T::zero());
        while cursor < track.history.len() && (track.history[cursor].0 - tau) * tau.signum() <= T::zero() {
            let h = track.history[cursor];
            branch = (h.1, h.2, h.3);
            cursor += 1;
        }
        if cursor > 0 {
            let h = track.history[cursor - 1];
            branch = (h.1, h.2, h.3);
        }
        if tau == T::zero() {
            branch = (Complex::new(T::one(), T::zero()), T::zero(), T::zero());
        }
        let m = CMatrix::from_row_major(d, y[m_off..].to_vec());
        out.push(ComplexTrajectory {
            z0: z0.clone(),
            z_tau: PhasePoint::from_slice(y, n),
            tau,
            action: y[s_off],
            stability: StabilityMatrix::from_matrix(n, m),
            det_d: branch.0,
            det_branch_phase: branch.1,
            max_branch_step: branch.2,
        });
    }
    Ok(out)
}

/// Real mean-field trajectory sampled at the checkpoints (flow only).
pub fn integrate_real<T: Real>(
    z0: &RealPhasePoint<T>,
    checkpoints: &[T],
    config: &LatticeConfig<T>,
    opts: &IntegratorOptions<T>,
) -> Result<Vec<RealPhasePoint<T>>> {
    let n = config.n_sites();
    let y0 = z0.to_vec();
    let bound = opts.escape_bound;
    let states = dopri5(
        |_t, y: &[T], dy: &mut [T]| flow_rhs_into(config, y, dy),
        T::zero(),
        &y0,
        checkpoints,
        &opts.control(),
        |_t, y: &[T]| {
            if max_magnitude::<T, _>(y) > bound {
                Verdict::Escape
            } else {
                Verdict::Accept
            }
        },
    )
    .map_err(diverged)?;
    Ok(states.iter().map(|y| PhasePoint::from_slice(y, n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::hamiltonian::total_number;
    use num_complex::Complex64;

    fn cfg(n: usize, j: f64, u: f64) -> LatticeConfig<f64> {
        LatticeConfig::new(n, j, u).unwrap()
    }

    fn complex_point() -> ComplexPhasePoint<f64> {
        PhasePoint::new(
            vec![
                Complex64::new(2.1, 0.3),
                Complex64::new(0.2, -0.1),
                Complex64::new(2.0, -0.2),
                Complex64::new(-0.1, 0.05),
            ],
            vec![
                Complex64::new(0.1, -0.2),
                Complex64::new(0.0, 0.1),
                Complex64::new(-0.3, 0.25),
                Complex64::new(0.05, 0.0),
            ],
        )
    }

    #[test]
    fn zero_time_is_identity() {
        let z0 = complex_point();
        let tr = integrate(&z0, 0.0, &cfg(4, 0.2, 2.0), &IntegratorOptions::default()).unwrap();
        assert_eq!(tr.z_tau, z0);
        assert_eq!(tr.action, Complex64::new(0.0, 0.0));
        assert_eq!(tr.stability, StabilityMatrix::identity(4));
        assert_eq!(tr.det_branch_phase, 0.0);
    }

    #[test]
    fn real_trajectory_conserves_energy_and_number() {
        let c = cfg(4, 0.2, 2.0);
        let z0 = RealPhasePoint::new(vec![3.1, 0.2, 3.3, -0.4], vec![0.3, 0.1, -0.2, 0.5]);
        let out = integrate_real(&z0, &[0.5, 1.3, 2.0], &c, &IntegratorOptions::default()).unwrap();
        let (h0, n0) = (hamiltonian_value(&z0, &c), total_number(&z0));
        for z in &out {
            assert!((hamiltonian_value(z, &c) - h0).abs() < 1e-9 * h0.abs());
            assert!((total_number(z) - n0).abs() < 1e-9 * n0);
        }
    }

    #[test]
    fn single_site_kerr_rotation_period() {
        // J = 0: a lone occupied site rotates with angular frequency U (I - 1)
        let (n, u) = (6.0f64, 0.7);
        let c = cfg(2, 0.0, u);
        let z0 = RealPhasePoint::new(vec![(2.0 * n).sqrt(), 0.0], vec![0.0, 0.0]);
        let period = std::f64::consts::TAU / (u * (n - 1.0));
        let out = integrate_real(&z0, &[0.25 * period, period], &c, &IntegratorOptions::default()).unwrap();
        assert!(out[0].q[0].abs() < 1e-8, "quarter turn {:?}", out[0]);
        assert!((out[0].p[0] + (2.0 * n).sqrt()).abs() < 1e-8);
        assert!((out[1].q[0] - z0.q[0]).abs() < 1e-8 && out[1].p[0].abs() < 1e-8);
    }

    #[test]
    fn complex_trajectory_invariants() {
        let c = cfg(4, 0.2, 2.0);
        let z0 = complex_point();
        let tr = integrate(&z0, 1.2, &c, &IntegratorOptions::default()).unwrap();
        let h0 = hamiltonian_value(&z0, &c);
        let n0 = total_number(&z0);
        assert!((hamiltonian_value(&tr.z_tau, &c) - h0).norm() < 1e-8 * h0.norm());
        assert!((total_number(&tr.z_tau) - n0).norm() < 1e-8 * n0.norm());
        assert!(tr.stability.symplectic_defect() < 1e-8, "{}", tr.stability.symplectic_defect());
        assert!(tr.max_branch_step < std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let c = cfg(4, 0.2, 2.0);
        let z0 = complex_point();
        let fwd = integrate(&z0, 0.9, &c, &IntegratorOptions::default()).unwrap();
        let back = integrate(&fwd.z_tau, -0.9, &c, &IntegratorOptions::default()).unwrap();
        for (a, b) in back.z_tau.to_vec().iter().zip(z0.to_vec()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn action_is_additive() {
        let c = cfg(4, 0.2, 2.0);
        let z0 = complex_point();
        let opts = IntegratorOptions::default();
        let full = integrate(&z0, 1.0, &c, &opts).unwrap();
        let first = integrate(&z0, 0.4, &c, &opts).unwrap();
        let second = integrate(&first.z_tau, 0.6, &c, &opts).unwrap();
        assert!((first.action + second.action - full.action).norm() < 1e-9 * (1.0 + full.action.norm()));
    }

    #[test]
    fn checkpoints_agree_with_separate_runs() {
        let c = cfg(4, 0.2, 2.0);
        let z0 = complex_point();
        let opts = IntegratorOptions::default();
        let many = integrate_checkpoints(&z0, &[0.0, 0.3, 0.7], &c, &opts).unwrap();
        let single = integrate(&z0, 0.7, &c, &opts).unwrap();
        assert!((many[2].action - single.action).norm() < 1e-9);
        assert!((many[2].det_branch_phase - single.det_branch_phase).abs() < 1e-9);
        assert_eq!(many[0].stability, StabilityMatrix::identity(4));
    }

    #[test]
    fn linear_flow_matches_hopping_rotation() {
        // U = 0: a_t = exp(-i h t) a_0 with h = -J * adjacency, so M is the
        // real representation of that unitary and independent of z0.
        let (jh, t) = (0.35f64, 1.7);
        let c = cfg(4, jh, 0.0);
        let tr = integrate(&complex_point(), t, &c, &IntegratorOptions::default()).unwrap();
        // eigenvectors of the 4-ring: plane waves with energies -2J cos(k)
        let n = 4usize;
        let mut u = CMatrix::<f64>::zeros(n);
        for j in 0..n {
            for l in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for kk in 0..n {
                    let k = std::f64::consts::TAU * kk as f64 / n as f64;
                    let e = -2.0 * jh * k.cos();
                    acc += Complex64::new(0.0, k * (j as f64 - l as f64) - e * t).exp() / n as f64;
                }
                u[(j, l)] = acc;
            }
        }
        let m = &tr.stability;
        for j in 0..n {
            for l in 0..n {
                // q_t = Re(U) q_0 - Im(U) p_0, p_t = Im(U) q_0 + Re(U) p_0
                assert!((m.m11()[(j, l)] - u[(j, l)].re).norm() < 1e-9);
                assert!((m.m12()[(j, l)] + u[(j, l)].im).norm() < 1e-9);
                assert!((m.m21()[(j, l)] - u[(j, l)].im).norm() < 1e-9);
                assert!((m.m22()[(j, l)] - u[(j, l)].re).norm() < 1e-9);
            }
        }
        // the hopping matrix is traceless, so det D = det U = 1
        assert!((tr.det_d - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn linear_flow_action_closed_form() {
        // U = 0: H = sum_k e_k (Q_k^2 + P_k^2)/2 in the normal modes of the
        // hopping matrix, and each mode contributes
        // S_k = [(P^2 - Q^2) sin(2 e t) - 2 Q P (1 - cos(2 e t))] / 4.
        let (jh, t) = (0.35f64, 1.1);
        let n = 4usize;
        let c = cfg(n, jh, 0.0);
        let z0 = complex_point();
        let tr = integrate(&z0, t, &c, &IntegratorOptions::default()).unwrap();
        let h = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
            let (r, l) = c.neighbors(i);
            -jh * ((j == r) as u8 + (j == l) as u8) as f64
        });
        let eig = h.symmetric_eigen();
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let col = eig.eigenvectors.column(k);
            let qk: Complex64 = (0..n).map(|j| z0.q[j] * col[j]).sum();
            let pk: Complex64 = (0..n).map(|j| z0.p[j] * col[j]).sum();
            let e = eig.eigenvalues[k];
            s += ((pk * pk - qk * qk) * (2.0 * e * t).sin() - 2.0 * qk * pk * (1.0 - (2.0 * e * t).cos())) / 4.0;
        }
        assert!((tr.action - s).norm() < 1e-9, "{} vs {}", tr.action, s);
    }
}
