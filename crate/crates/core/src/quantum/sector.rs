//! Number-conserving Fock sectors in descending lexicographic order.

use crate::error::{Error, Result};

/// All occupation vectors of `n_particles` bosons on `n_sites` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSector {
    n_sites: usize,
    n_particles: usize,
    basis: Vec<u16>,
    /// `compositions[k][r]` counts occupation vectors of `r` bosons on `k` sites.
    compositions: Vec<Vec<u64>>,
}

/// Number of occupation vectors, `C(n_particles + n_sites - 1, n_sites - 1)`,
/// or `None` on overflow.
pub fn sector_dimension(n_sites: usize, n_particles: usize) -> Option<u64> {
    if n_sites == 0 {
        return Some((n_particles == 0) as u64);
    }
    let (n, k) = ((n_particles + n_sites - 1) as u128, (n_sites - 1) as u128);
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    u64::try_from(acc).ok()
}

/// Enumerates a sector, refusing dimensions above `cap`.
pub fn enumerate_sector(n_sites: usize, n_particles: usize, cap: usize) -> Result<FockSector> {
    if n_sites == 0 {
        return Err(Error::Config("a sector needs at least one site".into()));
    }
    if n_particles > u16::MAX as usize {
        return Err(Error::Config("particle number exceeds u16 occupations".into()));
    }
    let dim = sector_dimension(n_sites, n_particles).unwrap_or(u64::MAX);
    if dim > cap as u64 {
        return Err(Error::SectorTooLarge {
            n_sites,
            n_particles,
            dimension: usize::try_from(dim).unwrap_or(usize::MAX),
            cap,
        });
    }
    let compositions = (0..=n_sites)
        .map(|k| {
            (0..=n_particles)
                .map(|r| sector_dimension(k, r).expect("bounded by the sector dimension"))
                .collect()
        })
        .collect();
    let mut basis = Vec::with_capacity(dim as usize * n_sites);
    let mut current = vec![0u16; n_sites];
    fill(&mut basis, &mut current, 0, n_particles);
    Ok(FockSector {
        n_sites,
        n_particles,
        basis,
        compositions,
    })
}

fn fill(out: &mut Vec<u16>, current: &mut [u16], site: usize, remaining: usize) {
    if site + 1 == current.len() {
        current[site] = remaining as u16;
        out.extend_from_slice(current);
        return;
    }
    for v in (0..=remaining).rev() {
        current[site] = v as u16;
        fill(out, current, site + 1, remaining - v);
    }
}

impl FockSector {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.basis.len() / self.n_sites
    }

    pub fn state(&self, index: usize) -> &[u16] {
        &self.basis[index * self.n_sites..(index + 1) * self.n_sites]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u16]> {
        self.basis.chunks_exact(self.n_sites)
    }

    /// Position of an occupation vector in the basis.
    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        if occupation.len() != self.n_sites
            || occupation.iter().map(|&m| m as usize).sum::<usize>() != self.n_particles
        {
            return None;
        }
        let mut rank = 0u64;
        let mut remaining = self.n_particles;
        for (j, &m) in occupation[..self.n_sites - 1].iter().enumerate() {
            let m = m as usize;
            if m < remaining {
                // vectors with a larger entry at site j come first
                rank += self.compositions[self.n_sites - j][remaining - m - 1];
            }
            remaining -= m;
        }
        Some(rank as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sectors() {
        let s = enumerate_sector(2, 1, 100).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![&[1u16, 0][..], &[0, 1][..]]);
        assert_eq!(enumerate_sector(4, 2, 100).unwrap().dim(), 10);
        let s = enumerate_sector(2, 2, 100).unwrap();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![&[2u16, 0][..], &[1, 1][..], &[0, 2][..]]);
    }

    #[test]
    fn dimension_matches_binomial() {
        // C(43, 3) = 43 * 42 * 41 / 6
        assert_eq!(sector_dimension(4, 40), Some(12341));
        assert_eq!(enumerate_sector(4, 40, 20_000).unwrap().dim(), 12341);
    }

    #[test]
    fn index_inverts_enumeration_and_order_is_lexicographic() {
        let s = enumerate_sector(4, 7, 10_000).unwrap();
        let mut prev: Option<&[u16]> = None;
        for (i, occ) in s.iter().enumerate() {
            assert_eq!(s.index_of(occ), Some(i));
            if let Some(p) = prev {
                assert!(p > occ, "descending lexicographic order");
            }
            prev = Some(occ);
        }
        assert_eq!(s.index_of(&[1, 1, 1, 1]), None);
    }

    #[test]
    fn cap_is_enforced() {
        match enumerate_sector(6, 30, 1000) {
            Err(Error::SectorTooLarge { dimension, .. }) => assert_eq!(dimension, 324_632),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_sector() {
        let s = enumerate_sector(3, 0, 10).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.state(0), &[0, 0, 0]);
    }
}
