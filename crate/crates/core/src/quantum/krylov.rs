//! Short-iterate Lanczos propagation `psi(t) = exp(-i H t) psi0`.
//!
//! One Krylov basis serves a whole step, and the step length is chosen
//! after the basis is built, so grid points inside a step cost only a small
//! tridiagonal exponential.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::hamiltonian::SparseHamiltonian;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Krylov subspace dimension.
    pub dim: usize,
    /// Target local error per step, relative to the state norm.
    pub tol: f64,
    /// Step halvings allowed before giving up.
    pub max_halvings: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            dim: 30,
            tol: 1e-12,
            max_halvings: 60,
        }
    }
}

/// Overlaps `<psi0|psi(tau)>` and norms `||psi(tau)||` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub overlaps: Vec<Complex64>,
    pub norms: Vec<f64>,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

struct KrylovStep {
    basis: Vec<Vec<Complex64>>,
    eigvals: Vec<f64>,
    /// Eigenvector matrix of the tridiagonal projection, column per eigenvalue.
    eigvecs: DMatrix<f64>,
    /// Coupling out of the subspace; zero after a lucky breakdown.
    beta_out: f64,
}

impl KrylovStep {
    fn build(h: &SparseHamiltonian, psi: &[Complex64], beta0: f64, m: usize) -> Self {
        let dim = psi.len();
        let m = m.min(dim).max(1);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        basis.push(psi.iter().map(|x| x / beta0).collect());
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        let mut beta_out = 0.0;
        for k in 0..m {
            h.apply(&basis[k], &mut w);
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            // two full Gram-Schmidt passes; one loses orthogonality near breakdown
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let b = norm(&w);
            let scale = a.abs() + beta.last().copied().unwrap_or(0.0) + 1e-300;
            if b <= 1e-13 * scale {
                beta_out = 0.0;
                break;
            }
            if k + 1 == m {
                beta_out = b;
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let kdim = alpha.len();
        let t = DMatrix::from_fn(kdim, kdim, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        basis.truncate(kdim);
        Self {
            basis,
            eigvals: eig.eigenvalues.iter().copied().collect(),
            eigvecs: eig.eigenvectors,
            beta_out,
        }
    }

    /// Coefficients `exp(-i T s) e_1` in the Krylov basis.
    fn coefficients(&self, s: f64) -> Vec<Complex64> {
        let k = self.eigvals.len();
        let phases: Vec<Complex64> = (0..k)
            .map(|nu| Complex64::from_polar(self.eigvecs[(0, nu)], -self.eigvals[nu] * s))
            .collect();
        (0..k)
            .map(|l| (0..k).map(|nu| phases[nu] * self.eigvecs[(l, nu)]).sum())
            .collect()
    }

    fn error_estimate(&self, s: f64) -> f64 {
        if self.beta_out == 0.0 {
            return 0.0;
        }
        let c = self.coefficients(s);
        self.beta_out * c.last().map_or(0.0, |x| x.norm())
    }
}

/// Propagates `psi0` under `h` and records `<psi0|psi(tau)>` at each grid point.
pub fn propagate_sector(
    h: &SparseHamiltonian,
    psi0: &[Complex64],
    grid: &[f64],
    opts: &KrylovOptions,
) -> Result<Propagation> {
    if grid.is_empty() {
        return Ok(Propagation {
            overlaps: vec![],
            norms: vec![],
        });
    }
    if grid[0] != 0.0 || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("Krylov grid must start at 0 and increase".into()));
    }
    let norm0 = norm(psi0);
    let mut overlaps = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut norms = vec![norm0; grid.len()];
    overlaps[0] = Complex64::new(norm0 * norm0, 0.0);
    if norm0 == 0.0 {
        return Ok(Propagation { overlaps, norms });
    }
    let t_end = *grid.last().unwrap();
    let mut psi = psi0.to_vec();
    let mut t = 0.0;
    let mut next = 1;
    while next < grid.len() && grid[next] == 0.0 {
        overlaps[next] = overlaps[0];
        next += 1;
    }
    let mut h_try = (opts.dim as f64 / (h.norm_bound() + 1e-300)).min(t_end.max(1e-300));
    while next < grid.len() {
        let beta0 = norm(&psi);
        let step = KrylovStep::build(h, &psi, beta0, opts.dim);
        let remaining = t_end - t;
        let mut s = h_try.min(remaining);
        let mut halvings = 0;
        let mut err = step.error_estimate(s);
        while err > opts.tol && halvings < opts.max_halvings {
            s *= 0.5;
            halvings += 1;
            err = step.error_estimate(s);
        }
        if err > opts.tol {
            return Err(Error::KrylovNonConvergence { tau: t, estimate: err });
        }
        let landing = s >= remaining;
        let t_new = if landing { t_end } else { t + s };
        let g: Vec<Complex64> = step.basis.iter().map(|v| dot(psi0, v)).collect();
        while next < grid.len() && grid[next] <= t_new {
            let c = step.coefficients(grid[next] - t);
            overlaps[next] = beta0 * g.iter().zip(&c).map(|(a, b)| a * b).sum::<Complex64>();
            norms[next] = beta0 * norm(&c);
            next += 1;
        }
        let c = step.coefficients(t_new - t);
        psi.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (v, cl) in step.basis.iter().zip(&c) {
            for (pi, vi) in psi.iter_mut().zip(v) {
                *pi += beta0 * cl * vi;
            }
        }
        t = t_new;
        h_try = if halvings == 0 { 2.0 * s } else { s };
    }
    Ok(Propagation { overlaps, norms })
}
