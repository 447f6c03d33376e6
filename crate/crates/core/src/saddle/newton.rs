use num_complex::Complex;

use super::manifold::ManifoldParameterization;
use crate::error::{Error, Result};
use crate::flow::{integrate, ComplexTrajectory, IntegratorOptions};
use crate::linalg::{inf_norm, CMatrix};
use crate::model::LatticeConfig;
use crate::scalar::{imag_unit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    /// Acceptance threshold on the infinity norm of the residual.
    pub tol: T,
    pub max_iter: usize,
    /// Step halvings tried before an iteration counts as rejected.
    pub max_halvings: usize,
    /// Give up once an iterate strays further than this from the seed
    /// (infinity norm).
    pub trust_radius: Option<T>,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-10),
            max_iter: 40,
            max_halvings: 8,
            trust_radius: None,
        }
    }
}

/// A converged root of the final-manifold condition.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome<T> {
    pub p0: Vec<Complex<T>>,
    pub trajectory: ComplexTrajectory<T>,
    pub residual: T,
    pub iterations: usize,
}

/// `dr/dp_0 = (M12 - M21) - i (M11 + M22)`
pub fn residual_jacobian<T: Real>(traj: &ComplexTrajectory<T>) -> CMatrix<T> {
    let n = traj.n_sites();
    let m = traj.stability.matrix();
    let i = imag_unit::<T>();
    CMatrix::from_fn(n, |j, k| (m[(j, n + k)] - m[(n + j, k)]) - i * (m[(j, k)] + m[(n + j, n + k)]))
}

/// Damped Newton iteration on `r(p_0)` at fixed `tau`.
pub fn newton_refine<T: Real>(
    manifold: &ManifoldParameterization<T>,
    seed: &[Complex<T>],
    tau: T,
    config: &LatticeConfig<T>,
    integ: &IntegratorOptions<T>,
    opts: &NewtonOptions<T>,
) -> Result<NewtonOutcome<T>> {
    let run = |p: &[Complex<T>]| -> Result<(ComplexTrajectory<T>, Vec<Complex<T>>)> {
        let traj = integrate(&manifold.initial_point(p), tau, config, integ)?;
        let r = manifold.residual(&traj.z_tau);
        Ok((traj, r))
    };
    let mut p = seed.to_vec();
    let (mut traj, mut r) = run(&p)?;
    let mut norm = inf_norm(&r);
    for iter in 0..=opts.max_iter {
        if norm < opts.tol {
            return Ok(NewtonOutcome {
                p0: p,
                trajectory: traj,
                residual: norm,
                iterations: iter,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let jac = residual_jacobian(&traj);
        let rhs: Vec<Complex<T>> = r.iter().map(|&x| -x).collect();
        let Some(step) = jac.lu().map(|lu| lu.solve(&rhs)) else {
            break;
        };
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<Complex<T>> = p.iter().zip(&step).map(|(&a, &d)| a + d * lambda).collect();
            let inside = opts
                .trust_radius
                .is_none_or(|radius| trial.iter().zip(seed).all(|(a, b)| (*a - *b).norm() <= radius));
            if let Some((t_traj, t_r)) = inside.then(|| run(&trial).ok()).flatten() {
                let t_norm = inf_norm(&t_r);
                if t_norm.is_finite() && t_norm < norm {
                    p = trial;
                    traj = t_traj;
                    r = t_r;
                    norm = t_norm;
                    accepted = true;
                    break;
                }
            }
            lambda *= T::of(0.5);
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                iterations: iter + 1,
                best_residual: norm.as_f64(),
            });
        }
    }
    Err(Error::NewtonDiverged {
        iterations: opts.max_iter,
        best_residual: norm.as_f64(),
    })
}
