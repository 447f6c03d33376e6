//! Lattice, initial state and derived timescales.
//!
//! Conventions: quadratures `a_j = (q_j + i p_j)/sqrt(2)` with the effective
//! Planck constant set to one, so scaled time and time coincide. Sites sit on
//! a ring, site `n_sites` wraps to site 0, and every bond sum runs over
//! `j = 0..n_sites` with neighbor `j + 1`. For two sites that sum visits the
//! single physical bond twice, which is kept deliberately.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::RealPhasePoint;
use crate::scalar::Real;

/// Ring size, hopping `J` and on-site interaction `U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig<T> {
    n_sites: usize,
    hopping: T,
    interaction: T,
}

impl<T: Real> LatticeConfig<T> {
    pub fn new(n_sites: usize, hopping: T, interaction: T) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::Config(format!("n_sites must be at least 2, got {n_sites}")));
        }
        if !hopping.is_finite() || !interaction.is_finite() {
            return Err(Error::Config("J and U must be finite".into()));
        }
        Ok(Self {
            n_sites,
            hopping,
            interaction,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Hopping amplitude `J`.
    pub fn hopping(&self) -> T {
        self.hopping
    }

    /// Interaction strength `U`.
    pub fn interaction(&self) -> T {
        self.interaction
    }

    /// Right and left neighbor of site `j` on the ring.
    #[inline]
    pub fn neighbors(&self, j: usize) -> (usize, usize) {
        let n = self.n_sites;
        ((j + 1) % n, (j + n - 1) % n)
    }

    pub fn cast<S: Real>(&self) -> LatticeConfig<S> {
        LatticeConfig {
            n_sites: self.n_sites,
            hopping: S::of(self.hopping.as_f64()),
            interaction: S::of(self.interaction.as_f64()),
        }
    }
}

/// Product coherent state `|b_1, ..., b_N>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentState<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> CoherentState<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Config("coherent state needs at least one site".into()));
        }
        if amplitudes.iter().any(|b| !b.re.is_finite() || !b.im.is_finite()) {
            return Err(Error::Config("coherent amplitudes must be finite".into()));
        }
        Ok(Self { amplitudes })
    }

    /// Density wave `|n, 0, n, 0, ...>` with `b = (sqrt(n), 0, ...)`.
    pub fn density_wave(n_sites: usize, n: T) -> Result<Self> {
        if n_sites == 0 || !n_sites.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "density wave needs an even, positive number of sites, got {n_sites}"
            )));
        }
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Config(format!("density wave occupation must be positive, got {n}")));
        }
        let amplitudes = (0..n_sites)
            .map(|j| {
                if j % 2 == 0 {
                    Complex::new(n.sqrt(), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            })
            .collect();
        Ok(Self { amplitudes })
    }

    pub fn vacuum(n_sites: usize) -> Self {
        Self {
            amplitudes: vec![Complex::new(T::zero(), T::zero()); n_sites],
        }
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn n_sites(&self) -> usize {
        self.amplitudes.len()
    }

    /// Mean occupations `n_j = |b_j|^2`.
    pub fn occupations(&self) -> Vec<T> {
        self.amplitudes.iter().map(|b| b.norm_sqr()).collect()
    }

    /// Mean total particle number.
    pub fn total(&self) -> T {
        self.amplitudes.iter().map(|b| b.norm_sqr()).sum()
    }

    pub fn max_occupation(&self) -> T {
        self.occupations().into_iter().fold(T::zero(), T::max)
    }

    /// True when every amplitude is real, the case the saddle machinery handles.
    pub fn is_real(&self) -> bool {
        self.amplitudes.iter().all(|b| b.im == T::zero())
    }

    pub fn check_sites(&self, config: &LatticeConfig<T>) -> Result<()> {
        if self.n_sites() != config.n_sites() {
            return Err(Error::Config(format!(
                "state has {} sites but the lattice has {}",
                self.n_sites(),
                config.n_sites()
            )));
        }
        Ok(())
    }

    pub fn cast<S: Real>(&self) -> CoherentState<S> {
        CoherentState {
            amplitudes: self
                .amplitudes
                .iter()
                .map(|b| Complex::new(S::of(b.re.as_f64()), S::of(b.im.as_f64())))
                .collect(),
        }
    }
}

/// Center of the coherent state in phase space: `(q_j, p_j) = sqrt(2) (Re b_j, Im b_j)`.
pub fn state_to_phase_center<T: Real>(state: &CoherentState<T>) -> RealPhasePoint<T> {
    let s = T::SQRT_2();
    RealPhasePoint::new(
        state.amplitudes.iter().map(|b| s * b.re).collect(),
        state.amplitudes.iter().map(|b| s * b.im).collect(),
    )
}

/// Inverse of [`state_to_phase_center`].
pub fn phase_center_to_state<T: Real>(center: &RealPhasePoint<T>) -> CoherentState<T> {
    let s = T::FRAC_1_SQRT_2();
    CoherentState {
        amplitudes: center
            .q
            .iter()
            .zip(&center.p)
            .map(|(&q, &p)| Complex::new(s * q, s * p))
            .collect(),
    }
}

/// Classical first-return time and quantum revival time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timescales<T> {
    pub tau1: T,
    pub tau2: T,
}

/// `tau1 = 2 pi / (U n_j)` over the occupied sites and `tau2 = 2 pi / U`.
///
/// Occupied sites must share one mean occupation (relative spread 1e-9).
/// Periods are reported as positive numbers for either sign of `U`.
pub fn compute_timescales<T: Real>(config: &LatticeConfig<T>, state: &CoherentState<T>) -> Result<Timescales<T>> {
    let u = config.interaction().abs();
    if u == T::zero() {
        return Err(Error::InteractionFree);
    }
    let occupied: Vec<T> = state.occupations().into_iter().filter(|&n| n > T::zero()).collect();
    let Some(&first) = occupied.first() else {
        return Err(Error::Config("vacuum state has no occupied site".into()));
    };
    for &n in &occupied[1..] {
        if (n - first).abs() > T::of(1e-9) * first {
            return Err(Error::NonUniformOccupation(first.as_f64(), n.as_f64()));
        }
    }
    let two_pi = T::TAU();
    Ok(Timescales {
        tau1: two_pi / (u * first),
        tau2: two_pi / u,
    })
}
