//! Exact propagation in number-conserving Fock sectors.
//!
//! The total particle number commutes with the Hamiltonian, so a product
//! coherent state splits into independent sectors with Poisson weights.
//! Everything here is `f64`: it is the reference the other engines are
//! measured against.

mod hamiltonian;
mod krylov;
mod sector;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hamiltonian::{build_sector_hamiltonian, SparseHamiltonian};
pub use krylov::{propagate_sector, KrylovOptions, Propagation};
pub use sector::{enumerate_sector, sector_dimension, FockSector};

use crate::error::{Error, Result};
use crate::model::{CoherentState, LatticeConfig};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumOptions {
    /// Poisson mass allowed to be dropped with discarded sectors.
    pub eps_trunc: f64,
    pub krylov: KrylovOptions,
    /// Largest sector dimension that will be enumerated.
    pub sector_cap: usize,
    /// Largest sector dimension that will be diagonalized densely.
    pub dense_cap: usize,
}

impl Default for QuantumOptions {
    fn default() -> Self {
        Self {
            eps_trunc: 1e-8,
            krylov: KrylovOptions::default(),
            sector_cap: 1_500_000,
            dense_cap: 4000,
        }
    }
}

/// Coefficients of the initial state restricted to one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorWavefunction {
    pub sector: FockSector,
    pub coefficients: Vec<Complex64>,
}

impl SectorWavefunction {
    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// One eigenvalue with its overlap weight `|<E|psi0>|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub energy: f64,
    pub weight: f64,
}

/// Result of [`quantum_autocorrelation`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRun {
    pub series: TimeSeries<f64>,
    /// Particle numbers of the propagated sectors, increasing.
    pub sectors: Vec<usize>,
    /// Poisson mass of the propagated sectors.
    pub retained_weight: f64,
    /// Largest relative norm drift seen in any sector.
    pub max_norm_drift: f64,
}

/// Per-site tables `e^{-|b|^2/2} b^m / sqrt(m!)` for `m = 0..=max_m`.
fn site_tables(state: &CoherentState<f64>, max_m: usize) -> Vec<Vec<Complex64>> {
    state
        .amplitudes()
        .iter()
        .map(|&b| {
            let mut t = Vec::with_capacity(max_m + 1);
            t.push(Complex64::new((-0.5 * b.norm_sqr()).exp(), 0.0));
            for m in 1..=max_m {
                let prev = t[m - 1];
                t.push(prev * b / (m as f64).sqrt());
            }
            t
        })
        .collect()
}

/// Projection of the product coherent state onto `sector`.
pub fn coherent_sector_amplitudes(state: &CoherentState<f64>, sector: &FockSector) -> Result<SectorWavefunction> {
    if state.n_sites() != sector.n_sites() {
        return Err(Error::Config(format!(
            "state has {} sites, sector has {}",
            state.n_sites(),
            sector.n_sites()
        )));
    }
    let tables = site_tables(state, sector.n_particles());
    let coefficients = sector
        .iter()
        .map(|occ| {
            occ.iter()
                .zip(&tables)
                .fold(Complex64::new(1.0, 0.0), |acc, (&m, t)| acc * t[m as usize])
        })
        .collect();
    Ok(SectorWavefunction {
        sector: sector.clone(),
        coefficients,
    })
}

/// `Poisson(n; mean)` evaluated in log space.
pub fn poisson_weight(n: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    (nf * mean.ln() - mean - ln_factorial(n)).exp()
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest set of particle numbers whose Poisson mass reaches `1 - eps`,
/// returned in increasing order together with that mass.
pub fn select_sectors(mean: f64, eps: f64) -> Result<(Vec<usize>, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Config(format!("eps_trunc must lie in (0, 1), got {eps}")));
    }
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::Config(format!("mean particle number {mean} is not valid")));
    }
    let n_max = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize;
    let mut weights: Vec<(usize, f64)> = (0..=n_max).map(|n| (n, poisson_weight(n, mean))).collect();
    weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut chosen = Vec::new();
    let mut mass = 0.0;
    for (n, w) in weights {
        if mass >= 1.0 - eps {
            break;
        }
        chosen.push(n);
        mass += w;
    }
    chosen.sort_unstable();
    // resum in sector order so the reported mass is reproducible
    let mass = chosen.iter().map(|&n| poisson_weight(n, mean)).sum();
    Ok((chosen, mass))
}

fn check_inputs(state: &CoherentState<f64>, config: &LatticeConfig<f64>) -> Result<()> {
    state.check_sites(config)
}

fn enumerate_checked(n_sites: usize, n: usize, cap: usize) -> Result<FockSector> {
    enumerate_sector(n_sites, n, cap).inspect_err(|_| {
        let mut feasible = n;
        while feasible > 0 && sector_dimension(n_sites, feasible).is_none_or(|d| d > cap as u64) {
            feasible -= 1;
        }
        log::error!(
            "sector N = {n} on {n_sites} sites exceeds the cap of {cap} states; \
             the largest feasible particle number on this ring is {feasible}"
        );
    })
}

/// `A(tau) = <psi0| exp(-i H tau) |psi0>` summed over the retained sectors.
pub fn quantum_autocorrelation(
    state: &CoherentState<f64>,
    config: &LatticeConfig<f64>,
    tau_grid: &[f64],
    opts: &QuantumOptions,
) -> Result<QuantumRun> {
    check_inputs(state, config)?;
    let (sectors, retained_weight) = select_sectors(state.total(), opts.eps_trunc)?;
    log::info!(
        "propagating {} sectors (N = {}..={}), retained mass {:.3e}",
        sectors.len(),
        sectors.first().unwrap_or(&0),
        sectors.last().unwrap_or(&0),
        retained_weight
    );
    for &n in &sectors {
        if sector_dimension(config.n_sites(), n).is_none_or(|d| d > opts.sector_cap as u64) {
            return enumerate_checked(config.n_sites(), n, opts.sector_cap).map(|_| unreachable!());
        }
    }
    let per_sector: Vec<Result<Propagation>> = sectors
        .par_iter()
        .map(|&n| {
            let sector = enumerate_checked(config.n_sites(), n, opts.sector_cap)?;
            let psi = coherent_sector_amplitudes(state, &sector)?;
            let h = build_sector_hamiltonian(&sector, config);
            propagate_sector(&h, &psi.coefficients, tau_grid, &opts.krylov)
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); tau_grid.len()];
    let mut max_norm_drift: f64 = 0.0;
    for p in per_sector {
        let p = p?;
        for (v, o) in values.iter_mut().zip(&p.overlaps) {
            *v += o;
        }
        if let Some(&n0) = p.norms.first() {
            if n0 > 0.0 {
                for nk in &p.norms {
                    max_norm_drift = max_norm_drift.max((nk - n0).abs() / n0);
                }
            }
        }
    }
    Ok(QuantumRun {
        series: TimeSeries::new(tau_grid.to_vec(), values),
        sectors,
        retained_weight,
        max_norm_drift,
    })
}

/// Interaction-only autocorrelation as a product of per-site Poisson sums.
pub fn kerr_analytic_autocorrelation(state: &CoherentState<f64>, interaction: f64, tau: f64) -> Complex64 {
    state
        .amplitudes()
        .iter()
        .map(|b| kerr_site(b.norm_sqr(), interaction, tau))
        .product()
}

fn kerr_site(n: f64, u: f64, tau: f64) -> Complex64 {
    if n == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut w = (-n).exp();
    let mut sum = Complex64::new(w, 0.0);
    let mut m = 0usize;
    loop {
        m += 1;
        w *= n / m as f64;
        // m(m-1)/2 is an integer, so the phase is U * pairs * tau
        let pairs = (m * (m - 1) / 2) as f64;
        sum += Complex64::from_polar(w, -u * pairs * tau);
        let ratio = n / (m + 1) as f64;
        if ratio < 1.0 && w * ratio / (1.0 - ratio) < 1e-17 {
            break;
        }
    }
    sum
}

/// Dense eigen-decomposition of each listed sector, pooled into lines.
pub fn exact_spectrum(
    state: &CoherentState<f64>,
    config: &LatticeConfig<f64>,
    sectors: &[usize],
    dense_cap: usize,
) -> Result<Vec<SpectralLine>> {
    check_inputs(state, config)?;
    for &n in sectors {
        let dim = sector_dimension(config.n_sites(), n).unwrap_or(u64::MAX);
        if dim > dense_cap as u64 {
            log::error!("sector N = {n} has {dim} states; use the windowed Fourier route for spectra at this size");
            return Err(Error::DenseSolveTooLarge {
                dimension: dim as usize,
                cap: dense_cap,
            });
        }
    }
    let per_sector: Vec<Result<Vec<SpectralLine>>> = sectors
        .par_iter()
        .map(|&n| {
            let sector = enumerate_sector(config.n_sites(), n, dense_cap)?;
            let psi = coherent_sector_amplitudes(state, &sector)?;
            let h = build_sector_hamiltonian(&sector, config);
            let eig = SymmetricEigen::new(h.to_dense());
            let re = DVector::from_iterator(psi.coefficients.len(), psi.coefficients.iter().map(|c| c.re));
            let im = DVector::from_iterator(psi.coefficients.len(), psi.coefficients.iter().map(|c| c.im));
            let overlaps_re = eig.eigenvectors.tr_mul(&re);
            let overlaps_im = eig.eigenvectors.tr_mul(&im);
            let mut lines: Vec<SpectralLine> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(k, &e)| SpectralLine {
                    energy: e,
                    weight: overlaps_re[k].powi(2) + overlaps_im[k].powi(2),
                })
                .collect();
            lines.sort_by(|a, b| a.energy.total_cmp(&b.energy));
            Ok(lines)
        })
        .collect();
    let mut out = Vec::new();
    for lines in per_sector {
        out.extend(lines?);
    }
    Ok(out)
}
