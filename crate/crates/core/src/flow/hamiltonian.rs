//! Mean-field Hamiltonian in quadratures and its derivatives.
//!
//! `H = -J sum_j (q_j q_{j+1} + p_j p_{j+1}) + U/2 sum_j I_j^2 - U sum_j I_j`
//! with `I_j = (q_j^2 + p_j^2) / 2`. The same polynomial is used for real and
//! complexified coordinates.

use crate::model::LatticeConfig;
use crate::phase::PhasePoint;
use crate::scalar::{PhaseElem, Real};

pub fn hamiltonian_value<T: Real, E: PhaseElem<T>>(z: &PhasePoint<E>, config: &LatticeConfig<T>) -> E {
    let half = T::of(0.5);
    let n = config.n_sites();
    let mut hop = E::zero();
    let mut onsite = E::zero();
    for j in 0..n {
        let (r, _) = config.neighbors(j);
        hop += z.q[j] * z.q[r] + z.p[j] * z.p[r];
        let i = (z.q[j] * z.q[j] + z.p[j] * z.p[j]) * half;
        onsite += i * i * half - i;
    }
    hop * (-config.hopping()) + onsite * config.interaction()
}

/// `sum_j (q_j^2 + p_j^2) / 2`, the classical total number.
pub fn total_number<T: Real, E: PhaseElem<T>>(z: &PhasePoint<E>) -> E {
    z.q.iter()
        .zip(&z.p)
        .fold(E::zero(), |acc, (&q, &p)| acc + (q * q + p * p) * T::of(0.5))
}

/// Hamilton's equations `(dq/dt, dp/dt) = (dH/dp, -dH/dq)`.
pub fn flow_rhs<T: Real, E: PhaseElem<T>>(z: &PhasePoint<E>, config: &LatticeConfig<T>) -> PhasePoint<E> {
    let n = config.n_sites();
    let mut y = z.to_vec();
    let mut dy = vec![E::zero(); 2 * n];
    flow_rhs_into(config, &y, &mut dy);
    y.clear();
    PhasePoint::from_slice(&dy, n)
}

/// Flow on a flat `[q, p]` slice.
pub(crate) fn flow_rhs_into<T: Real, E: PhaseElem<T>>(config: &LatticeConfig<T>, y: &[E], dy: &mut [E]) {
    let n = config.n_sites();
    let (jh, u) = (config.hopping(), config.interaction());
    let half = T::of(0.5);
    let (q, p) = y.split_at(n);
    for j in 0..n {
        let (r, l) = config.neighbors(j);
        let w = ((q[j] * q[j] + p[j] * p[j]) * half - E::one()) * u;
        dy[j] = w * p[j] - (p[r] + p[l]) * jh;
        dy[n + j] = (q[r] + q[l]) * jh - w * q[j];
    }
}

/// `out = Jac(y) * m` for a `2n x 2n` row-major matrix `m`, the right-hand
/// side of the variational equations.
pub(crate) fn jacobian_times<T: Real, E: PhaseElem<T>>(config: &LatticeConfig<T>, y: &[E], m: &[E], out: &mut [E]) {
    let n = config.n_sites();
    let d = 2 * n;
    let (jh, u) = (config.hopping(), config.interaction());
    let half = T::of(0.5);
    let (q, p) = y.split_at(n);
    for j in 0..n {
        let (r, l) = config.neighbors(j);
        let w = ((q[j] * q[j] + p[j] * p[j]) * half - E::one()) * u;
        let qp = q[j] * p[j] * u;
        let pp = w + p[j] * p[j] * u;
        let qq = w + q[j] * q[j] * u;
        let (rq, rp) = (j * d, (n + j) * d);
        for c in 0..d {
            let mq = m[rq + c];
            let mp = m[rp + c];
            out[rq + c] = mq * qp + mp * pp - (m[(n + r) * d + c] + m[(n + l) * d + c]) * jh;
            out[rp + c] = (m[r * d + c] + m[l * d + c]) * jh - mq * qq - mp * qp;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, j: f64, u: f64) -> LatticeConfig<f64> {
        LatticeConfig::new(n, j, u).unwrap()
    }

    #[test]
    fn density_wave_center_energy() {
        let s = 40f64.sqrt();
        let z = PhasePoint::new(vec![s, 0.0, s, 0.0], vec![0.0; 4]);
        let h = hamiltonian_value(&z, &cfg(4, 0.2, 0.5));
        assert!((h - 180.0).abs() < 1e-12, "{h}");
    }

    #[test]
    fn origin_is_a_fixed_point_with_zero_energy() {
        let z = PhasePoint::<f64>::zeros(4);
        let c = cfg(4, 0.3, 1.1);
        assert_eq!(hamiltonian_value(&z, &c), 0.0);
        let dz = flow_rhs(&z, &c);
        assert!(dz.to_vec().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_site_ring_counts_bond_twice() {
        let r2 = 2f64.sqrt();
        let z = PhasePoint::new(vec![r2, r2], vec![0.0, 0.0]);
        assert!((hamiltonian_value(&z, &cfg(2, 1.0, 0.0)) + 4.0).abs() < 1e-14);
    }

    #[test]
    fn rhs_matches_finite_differences_of_hamiltonian() {
        let c = cfg(4, 0.37, 0.83);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-5;
        for _ in 0..10 {
            let mut z = PhasePoint::new(vec![Complex64::default(); 4], vec![Complex64::default(); 4]);
            for x in z.q.iter_mut().chain(z.p.iter_mut()) {
                *x = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
            }
            let dz = flow_rhs(&z, &c);
            for j in 0..4 {
                // holomorphic: derivative along the real axis suffices
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp.p[j] += h;
                zm.p[j] -= h;
                let dh_dp = (hamiltonian_value(&zp, &c) - hamiltonian_value(&zm, &c)) / (2.0 * h);
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp.q[j] += h;
                zm.q[j] -= h;
                let dh_dq = (hamiltonian_value(&zp, &c) - hamiltonian_value(&zm, &c)) / (2.0 * h);
                assert!((dz.q[j] - dh_dp).norm() < 1e-7 * (1.0 + dh_dp.norm()));
                assert!((dz.p[j] + dh_dq).norm() < 1e-7 * (1.0 + dh_dq.norm()));
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_of_rhs() {
        let c = cfg(3, 0.5, 1.3);
        let n = 3;
        let d = 2 * n;
        let y: Vec<Complex64> = (0..d).map(|k| Complex64::new(0.3 * k as f64 - 0.7, 0.1 * k as f64)).collect();
        let mut ident = vec![Complex64::default(); d * d];
        for k in 0..d {
            ident[k * d + k] = Complex64::new(1.0, 0.0);
        }
        let mut jac = vec![Complex64::default(); d * d];
        jacobian_times(&c, &y, &ident, &mut jac);
        let h = 1e-6;
        for col in 0..d {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[col] += h;
            ym[col] -= h;
            let mut fp = vec![Complex64::default(); d];
            let mut fm = vec![Complex64::default(); d];
            flow_rhs_into(&c, &yp, &mut fp);
            flow_rhs_into(&c, &ym, &mut fm);
            for row in 0..d {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!((jac[row * d + col] - fd).norm() < 1e-7, "({row},{col})");
            }
        }
    }
}
