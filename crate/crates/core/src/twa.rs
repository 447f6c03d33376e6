//! Truncated Wigner estimate of `C(tau)` and its saddle-diagonal counterpart.
//!
//! Each Wigner sample is a real mean-field trajectory. The autocorrelation
//! estimator is the phase-space overlap of the evolved and the initial
//! Wigner function, `(2 pi)^N int W0(z) W0(z_tau) dz`, which for the
//! Gaussian `W0` gives a per-sample value `2^N exp(-|z_tau - z_c|^2)`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{integrate_real, IntegratorOptions};
use crate::model::{state_to_phase_center, CoherentState, LatticeConfig};
use crate::phase::RealPhasePoint;
use crate::scalar::Real;
use crate::semiclassical::SaddleContribution;

/// Samples per random stream. Fixed so results do not depend on thread count.
const CHUNK: usize = 1024;

/// Draws from the Wigner function of a product coherent state.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerSampler<T> {
    pub state: CoherentState<T>,
    pub seed: u64,
    pub samples: usize,
}

impl<T: Real> WignerSampler<T> {
    pub fn new(state: CoherentState<T>, seed: u64, samples: usize) -> Self {
        Self { state, seed, samples }
    }

    fn n_chunks(&self) -> usize {
        self.samples.div_ceil(CHUNK)
    }

    fn chunk(&self, c: usize) -> Vec<RealPhasePoint<T>> {
        let center = state_to_phase_center(&self.state);
        let n = center.n_sites();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(c as u64);
        let noise = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid normal");
        let len = CHUNK.min(self.samples - c * CHUNK);
        (0..len)
            .map(|_| {
                let q = (0..n).map(|j| center.q[j] + T::of(noise.sample(&mut rng))).collect();
                let p = (0..n).map(|j| center.p[j] + T::of(noise.sample(&mut rng))).collect();
                RealPhasePoint::new(q, p)
            })
            .collect()
    }
}

/// All samples in index order.
pub fn sample_wigner<T: Real>(sampler: &WignerSampler<T>) -> Vec<RealPhasePoint<T>> {
    (0..sampler.n_chunks()).flat_map(|c| sampler.chunk(c)).collect()
}

/// Initial points and their evolved images on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TwaEnsemble<T> {
    pub tau: Vec<T>,
    pub initial: Vec<RealPhasePoint<T>>,
    /// `finals[s][k]` is sample `s` at `tau[k]`; `None` for escaped samples.
    pub finals: Vec<Option<Vec<RealPhasePoint<T>>>>,
}

impl<T: Real> TwaEnsemble<T> {
    pub fn dropped(&self) -> usize {
        self.finals.iter().filter(|f| f.is_none()).count()
    }
}

/// Propagates every Wigner sample through the grid.
pub fn propagate_ensemble<T: Real>(
    sampler: &WignerSampler<T>,
    config: &LatticeConfig<T>,
    tau_grid: &[T],
    opts: &IntegratorOptions<T>,
) -> Result<TwaEnsemble<T>> {
    sampler.state.check_sites(config)?;
    let initial = sample_wigner(sampler);
    let finals: Vec<_> = initial
        .par_iter()
        .map(|z0| integrate_real(z0, tau_grid, config, opts).ok())
        .collect();
    let ens = TwaEnsemble {
        tau: tau_grid.to_vec(),
        initial,
        finals,
    };
    warn_drops(ens.dropped(), sampler.samples);
    Ok(ens)
}

fn warn_drops(dropped: usize, total: usize) {
    if dropped * 100 > total {
        log::warn!("{dropped} of {total} Wigner trajectories escaped and were dropped");
    }
}

/// Sample mean of `C(tau)` with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwaSeries<T> {
    pub tau: Vec<T>,
    pub estimate: Vec<T>,
    pub stderr: Vec<T>,
    /// Samples that contributed (escaped ones excluded).
    pub samples: usize,
    pub dropped: usize,
}

impl<T: Real> TwaSeries<T> {
    /// `sqrt(C)`, comparable with `|A|`.
    pub fn sqrt_estimate(&self) -> Vec<T> {
        self.estimate.iter().map(|c| c.max(T::zero()).sqrt()).collect()
    }
}

/// `2^N exp(-|z - z_c|^2)` for one evolved point.
pub fn overlap_weight<T: Real>(z: &RealPhasePoint<T>, center: &RealPhasePoint<T>) -> T {
    let n = z.n_sites();
    let d2: T = (0..n)
        .map(|j| {
            let dq = z.q[j] - center.q[j];
            let dp = z.p[j] - center.p[j];
            dq * dq + dp * dp
        })
        .sum();
    T::of(2.0).powi(n as i32) * (-d2).exp()
}

#[derive(Clone)]
struct Welford {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        for (k, &v) in x.iter().enumerate() {
            let d = v - self.mean[k];
            self.mean[k] += d / self.count;
            self.m2[k] += d * (v - self.mean[k]);
        }
    }

    fn merge(&mut self, other: &Welford) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        for k in 0..self.mean.len() {
            let d = other.mean[k] - self.mean[k];
            self.mean[k] += d * other.count / n;
            self.m2[k] += other.m2[k] + d * d * self.count * other.count / n;
        }
        self.count = n;
    }
}

/// Monte-Carlo estimate of `C(tau)` in the truncated Wigner approximation.
pub fn twa_autocorrelation<T: Real>(
    state: &CoherentState<T>,
    config: &LatticeConfig<T>,
    tau_grid: &[T],
    sampler: &WignerSampler<T>,
    opts: &IntegratorOptions<T>,
) -> Result<TwaSeries<T>> {
    state.check_sites(config)?;
    if sampler.samples == 0 {
        return Err(Error::Config("TWA needs at least one sample".into()));
    }
    if sampler.state != *state {
        return Err(Error::Config("sampler state differs from the propagated state".into()));
    }
    let center = state_to_phase_center(state);
    let chunks: Vec<(Welford, usize)> = (0..sampler.n_chunks())
        .into_par_iter()
        .map(|c| {
            let mut acc = Welford::new(tau_grid.len());
            let mut dropped = 0;
            for z0 in sampler.chunk(c) {
                match integrate_real(&z0, tau_grid, config, opts) {
                    Ok(path) => {
                        let w: Vec<f64> = path.iter().map(|z| overlap_weight(z, &center).as_f64()).collect();
                        acc.push(&w);
                    }
                    Err(_) => dropped += 1,
                }
            }
            (acc, dropped)
        })
        .collect();
    let mut total = Welford::new(tau_grid.len());
    let mut dropped = 0;
    for (acc, d) in &chunks {
        total.merge(acc);
        dropped += d;
    }
    warn_drops(dropped, sampler.samples);
    let count = total.count;
    let stderr = total
        .m2
        .iter()
        .map(|&m2| if count > 1.0 { T::of((m2 / (count - 1.0) / count).sqrt()) } else { T::infinity() })
        .collect();
    Ok(TwaSeries {
        tau: tau_grid.to_vec(),
        estimate: total.mean.iter().map(|&m| T::of(m)).collect(),
        stderr,
        samples: count as usize,
        dropped,
    })
}

/// How the diagonal sum treats a complex prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalMode {
    /// `sum |c| |e^{i phi}|^2`
    #[default]
    Modulus,
    /// `sum Re(c) |e^{i phi}|^2`
    RealPart,
}

/// Incoherent saddle sum; the flag is set when there were no saddles.
pub fn diagonal_from_saddles<T: Real>(saddles: &[SaddleContribution<T>], mode: DiagonalMode) -> (T, bool) {
    if saddles.is_empty() {
        return (T::zero(), true);
    }
    let two = T::of(2.0);
    let total = saddles
        .iter()
        .map(|s| {
            let c: Complex<T> = s.amplitude * s.amplitude;
            let damping = (two * s.phase.re).exp();
            let weight = match mode {
                DiagonalMode::Modulus => c.norm(),
                DiagonalMode::RealPart => c.re,
            };
            weight * damping
        })
        .sum();
    (total, false)
}
