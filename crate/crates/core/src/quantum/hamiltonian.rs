//! Sector block of the Bose-Hubbard Hamiltonian as a real symmetric CSR matrix.

use num_complex::Complex64;

use super::sector::FockSector;
use crate::model::LatticeConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// `H = -J sum_j (a_j^+ a_{j+1} + h.c.) + U/2 sum_j n_j (n_j - 1)` restricted
/// to one sector.
pub fn build_sector_hamiltonian(sector: &FockSector, config: &LatticeConfig<f64>) -> SparseHamiltonian {
    let n = sector.n_sites();
    let dim = sector.dim();
    let (jh, u) = (config.hopping(), config.interaction());
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(2 * n + 1);
    let mut work = vec![0u16; n];
    for (i, occ) in sector.iter().enumerate() {
        entries.clear();
        let diag: f64 = occ.iter().map(|&m| 0.5 * u * m as f64 * (m as f64 - 1.0)).sum();
        entries.push((i as u32, diag));
        if jh != 0.0 {
            for j in 0..n {
                let r = (j + 1) % n;
                // a_j^+ a_r and its conjugate a_r^+ a_j
                for (to, from) in [(j, r), (r, j)] {
                    if occ[from] == 0 {
                        continue;
                    }
                    work.copy_from_slice(occ);
                    let amp = ((occ[to] as f64 + 1.0) * occ[from] as f64).sqrt();
                    work[to] += 1;
                    work[from] -= 1;
                    let k = sector.index_of(&work).expect("hop stays in sector");
                    entries.push((k as u32, -jh * amp));
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut last: Option<u32> = None;
        for &(c, v) in &entries {
            if last == Some(c) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                last = Some(c);
            }
        }
        row_ptr.push(cols.len());
    }
    SparseHamiltonian {
        dim,
        row_ptr,
        cols,
        vals,
    }
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[row.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[row.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = H x`
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k] as usize] * self.vals[k];
            }
            *yi = acc;
        }
    }

    /// Upper bound on the spectral radius (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::super::sector::enumerate_sector;
    use super::*;

    fn cfg(n: usize, j: f64, u: f64) -> LatticeConfig<f64> {
        LatticeConfig::new(n, j, u).unwrap()
    }

    #[test]
    fn two_sites_two_particles_interaction_only() {
        let s = enumerate_sector(2, 2, 10).unwrap();
        let h = build_sector_hamiltonian(&s, &cfg(2, 0.0, 1.0));
        let d = h.to_dense();
        assert_eq!((d[(0, 0)], d[(1, 1)], d[(2, 2)]), (1.0, 0.0, 1.0));
        assert_eq!(h.nnz(), 3);
    }

    #[test]
    fn two_site_ring_counts_bond_twice() {
        let s = enumerate_sector(2, 1, 10).unwrap();
        let h = build_sector_hamiltonian(&s, &cfg(2, 1.0, 3.7));
        assert_eq!(h.get(0, 1), -2.0);
        assert_eq!(h.get(1, 0), -2.0);
    }

    #[test]
    fn hopping_matrix_elements_follow_bosonic_factors() {
        // independent expansion: <m'| a_0^+ a_1 |m> for m = (1, 2, 0), m' = (2, 1, 0)
        let s = enumerate_sector(3, 3, 100).unwrap();
        let h = build_sector_hamiltonian(&s, &cfg(3, 0.5, 0.0));
        let from = s.index_of(&[1, 2, 0]).unwrap();
        let to = s.index_of(&[2, 1, 0]).unwrap();
        assert!((h.get(to, from) + 0.5 * (2.0f64 * 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hermitian_by_construction() {
        let s = enumerate_sector(4, 6, 1000).unwrap();
        let h = build_sector_hamiltonian(&s, &cfg(4, 0.3, 1.7));
        let d = h.to_dense();
        assert_eq!((&d - d.transpose()).abs().max(), 0.0);
    }

    #[test]
    fn diagonal_without_hopping() {
        let s = enumerate_sector(3, 5, 1000).unwrap();
        let h = build_sector_hamiltonian(&s, &cfg(3, 0.0, 0.9));
        assert_eq!(h.nnz(), h.dim());
    }
}
