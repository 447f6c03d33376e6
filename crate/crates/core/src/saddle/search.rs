use std::cmp::Ordering;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifold::ManifoldParameterization;
use super::newton::{newton_refine, NewtonOptions};
use super::seeds::{generate_real_seeds, SeedOptions};
use crate::error::{Error, Result};
use crate::flow::{integrate, ComplexTrajectory, IntegratorOptions};
use crate::model::{CoherentState, LatticeConfig};
use crate::scalar::Real;
use crate::semiclassical::{contribution, SaddleContribution};
use crate::twa::{propagate_ensemble, TwaEnsemble, WignerSampler};

/// Where a saddle family was first found.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedOrigin {
    /// The wave-packet center at `tau = 0`.
    Trivial,
    /// A cluster of real Wigner trajectories at grid index `tau_index`.
    RealPathway { tau_index: usize, cluster: usize },
    /// Not tied to any real pathway.
    Unanchored { label: usize },
}

impl SeedOrigin {
    pub fn is_real_pathway(&self) -> bool {
        !matches!(self, SeedOrigin::Unanchored { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub family: usize,
    pub root: SeedOrigin,
    /// Grid index at which the family was created.
    pub born: usize,
}

/// A converged saddle trajectory at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleCandidate<T> {
    pub p0: Vec<Complex<T>>,
    pub tau: T,
    pub residual: T,
    pub trajectory: ComplexTrajectory<T>,
    /// Never empty; the first entry is the oldest family.
    pub provenance: Vec<Provenance>,
    /// Grid index this saddle was continued from.
    pub parent: Option<usize>,
}

impl<T: Real> SaddleCandidate<T> {
    pub fn family(&self) -> usize {
        self.provenance[0].family
    }

    pub fn has_real_pathway(&self) -> bool {
        self.provenance.iter().any(|p| p.root.is_real_pathway())
    }
}

/// Lattice, manifold and numerical settings shared by all refinements.
#[derive(Debug, Clone)]
pub struct SaddleSearch<T> {
    pub manifold: ManifoldParameterization<T>,
    pub config: LatticeConfig<T>,
    pub integrator: IntegratorOptions<T>,
    pub newton: NewtonOptions<T>,
    /// Interval halvings allowed when a continuation step fails.
    pub max_subdivisions: usize,
    /// Cheaper integrator for the first stage of seed refinement.
    pub coarse_integrator: IntegratorOptions<T>,
    pub coarse_tol: T,
}

impl<T: Real> SaddleSearch<T> {
    pub fn new(state: &CoherentState<T>, config: &LatticeConfig<T>) -> Result<Self> {
        state.check_sites(config)?;
        Ok(Self {
            manifold: ManifoldParameterization::new(state)?,
            config: *config,
            integrator: IntegratorOptions {
                rtol: T::of(1e-12),
                atol: T::of(1e-13),
                ..IntegratorOptions::for_state(state)
            },
            newton: NewtonOptions::default(),
            max_subdivisions: 3,
            coarse_integrator: IntegratorOptions {
                rtol: T::of(1e-9),
                atol: T::of(1e-10),
                ..IntegratorOptions::for_state(state)
            },
            coarse_tol: T::of(1e-7),
        })
    }

    pub fn refine(&self, seed: &[Complex<T>], tau: T, provenance: Vec<Provenance>) -> Result<SaddleCandidate<T>> {
        let out = newton_refine(&self.manifold, seed, tau, &self.config, &self.integrator, &self.newton)?;
        Ok(SaddleCandidate {
            p0: out.p0,
            tau,
            residual: out.residual,
            trajectory: out.trajectory,
            provenance,
            parent: None,
        })
    }

    /// Refines a real-pathway seed in two stages: a coarse solve confined to
    /// a ball of `radius` around the seed, then, unless the coarse root is
    /// within `match_tol` of one of `known`, a tight polish.
    pub fn refine_seed(
        &self,
        seed: &[Complex<T>],
        tau: T,
        provenance: Vec<Provenance>,
        radius: T,
        known: &[&[Complex<T>]],
        match_tol: T,
    ) -> Result<Option<SaddleCandidate<T>>> {
        let coarse = NewtonOptions {
            tol: self.coarse_tol,
            trust_radius: Some(radius),
            ..self.newton
        };
        let rough = newton_refine(&self.manifold, seed, tau, &self.config, &self.coarse_integrator, &coarse)?;
        let close = |p: &[Complex<T>]| p.iter().zip(&rough.p0).all(|(a, b)| (*a - *b).norm() < match_tol);
        if known.iter().any(|p| close(p)) {
            return Ok(None);
        }
        self.refine(&rough.p0, tau, provenance).map(Some)
    }

    /// The single saddle at `tau = 0`, the wave-packet center.
    pub fn trivial(&self) -> Result<SaddleCandidate<T>> {
        let p0 = vec![Complex::new(T::zero(), T::zero()); self.manifold.n_sites()];
        let trajectory = integrate(&self.manifold.initial_point(&p0), T::zero(), &self.config, &self.integrator)?;
        Ok(SaddleCandidate {
            p0,
            tau: T::zero(),
            residual: T::zero(),
            trajectory,
            provenance: vec![Provenance {
                family: 0,
                root: SeedOrigin::Trivial,
                born: 0,
            }],
            parent: None,
        })
    }

    /// Moves `saddle` to `saddle.tau + dtau` by predictor-corrector steps.
    ///
    /// `previous` (same family, earlier time) enables a linear predictor;
    /// otherwise `p_0` is reused. A failed corrector splits the interval.
    pub fn continue_in_time(
        &self,
        saddle: &SaddleCandidate<T>,
        previous: Option<&SaddleCandidate<T>>,
        dtau: T,
    ) -> Result<SaddleCandidate<T>> {
        self.continue_level(saddle, previous, dtau, 0)
    }

    fn continue_level(
        &self,
        saddle: &SaddleCandidate<T>,
        previous: Option<&SaddleCandidate<T>>,
        dtau: T,
        level: usize,
    ) -> Result<SaddleCandidate<T>> {
        let tau_new = saddle.tau + dtau;
        let predictor: Vec<Complex<T>> = match previous {
            Some(prev) if prev.tau != saddle.tau => {
                let f = dtau / (saddle.tau - prev.tau);
                saddle.p0.iter().zip(&prev.p0).map(|(&a, &b)| a + (a - b) * f).collect()
            }
            _ => saddle.p0.clone(),
        };
        match self.refine(&predictor, tau_new, saddle.provenance.clone()) {
            Ok(c) => Ok(c),
            Err(e) if level >= self.max_subdivisions => Err(e),
            Err(_) => {
                let half = dtau * T::of(0.5);
                let mid = self.continue_level(saddle, previous, half, level + 1)?;
                self.continue_level(&mid, Some(saddle), half, level + 1)
            }
        }
    }
}

/// Lexicographic order on `p_0`, real part before imaginary part per site.
pub fn canonical_cmp<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(Ordering::Equal));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

pub fn canonical_sort<T: Real>(cands: &mut [SaddleCandidate<T>]) {
    cands.sort_by(|a, b| canonical_cmp(&a.p0, &b.p0));
}

/// Merges candidates whose `p_0` agree within `tol` (infinity norm),
/// keeping the smaller residual and the union of provenances.
pub fn deduplicate<T: Real>(cands: Vec<SaddleCandidate<T>>, tol: T) -> Vec<SaddleCandidate<T>> {
    let mut kept: Vec<SaddleCandidate<T>> = Vec::with_capacity(cands.len());
    for c in cands {
        let hit = kept.iter_mut().find(|k| {
            k.p0.iter()
                .zip(&c.p0)
                .all(|(a, b)| (*a - *b).norm() < tol)
        });
        match hit {
            Some(k) => {
                let mut prov = k.provenance.clone();
                prov.extend(c.provenance.iter().cloned());
                prov.sort();
                prov.dedup();
                let parent = k.parent.or(c.parent);
                if c.residual < k.residual {
                    *k = c;
                }
                k.provenance = prov;
                k.parent = parent;
            }
            None => kept.push(c),
        }
    }
    for k in &mut kept {
        k.provenance.sort();
    }
    kept
}

/// Why a converged saddle was left out of the coherent sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DiscardReason<T> {
    NoRealPathway,
    Caustic,
    Growth { magnitude: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discarded<T> {
    pub candidate: SaddleCandidate<T>,
    pub reason: DiscardReason<T>,
}

/// Saddles that enter the sum, with their contributions, and the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered<T> {
    pub kept: Vec<(SaddleCandidate<T>, SaddleContribution<T>)>,
    pub discarded: Vec<Discarded<T>>,
}

/// Keeps saddles rooted in a real pathway whose contribution magnitude does
/// not exceed `growth_bound`. Order is preserved.
pub fn filter_contributing<T: Real>(cands: Vec<SaddleCandidate<T>>, growth_bound: T) -> Filtered<T> {
    let mut out = Filtered {
        kept: Vec::new(),
        discarded: Vec::new(),
    };
    for c in cands {
        if !c.has_real_pathway() {
            out.discarded.push(Discarded {
                candidate: c,
                reason: DiscardReason::NoRealPathway,
            });
            continue;
        }
        match contribution(&c.trajectory) {
            Err(_) => {
                log::debug!("family {} sits on a caustic at tau = {}", c.family(), c.tau);
                out.discarded.push(Discarded {
                    candidate: c,
                    reason: DiscardReason::Caustic,
                });
            }
            Ok(s) => {
                let magnitude = s.value().norm();
                if magnitude.is_finite() && magnitude <= growth_bound {
                    out.kept.push((c, s));
                } else {
                    out.discarded.push(Discarded {
                        candidate: c,
                        reason: DiscardReason::Growth { magnitude },
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions<T> {
    pub seeds: SeedOptions<T>,
    /// Wigner samples in the seeding ensemble.
    pub seeding_samples: usize,
    pub rng_seed: u64,
    /// Reseed at every `reseed_every`-th grid point; zero disables reseeding.
    pub reseed_every: usize,
    pub dedup_tol: T,
    /// Distance in `p_0` at which a coarse seed root is taken to be a known saddle.
    pub match_tol: T,
    pub growth_bound: T,
    pub keep_discarded: bool,
    pub max_families: usize,
    /// Integrator for the seeding ensemble.
    pub ensemble_integrator: IntegratorOptions<T>,
}

impl<T: Real> Default for SweepOptions<T> {
    fn default() -> Self {
        Self {
            seeds: SeedOptions::default(),
            seeding_samples: 2000,
            rng_seed: 1,
            reseed_every: 2,
            dedup_tol: T::of(1e-6),
            match_tol: T::of(1e-4),
            growth_bound: T::of(10.0),
            keep_discarded: false,
            max_families: 400,
            ensemble_integrator: IntegratorOptions {
                rtol: T::of(1e-8),
                atol: T::of(1e-10),
                ..Default::default()
            },
        }
    }
}

/// Saddles at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryEntry<T> {
    pub tau: T,
    /// Contributing saddles in canonical order, aligned with `contributions`.
    pub saddles: Vec<SaddleCandidate<T>>,
    pub contributions: Vec<SaddleContribution<T>>,
    /// Only filled when discarded saddles are kept.
    pub discarded: Vec<Discarded<T>>,
    /// Real-pathway seeds tried at this time.
    pub seeds_tried: usize,
    /// Clusters found at this time.
    pub clusters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleInventory<T> {
    pub entries: Vec<InventoryEntry<T>>,
    pub families: usize,
    /// `(family, grid index)` where continuation failed.
    pub terminated: Vec<(usize, usize)>,
}

impl<T: Real> SaddleInventory<T> {
    pub fn tau(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.tau).collect()
    }

    pub fn contributions(&self) -> Vec<Vec<SaddleContribution<T>>> {
        self.entries.iter().map(|e| e.contributions.clone()).collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.saddles.len()).collect()
    }
}

struct Active<T> {
    current: SaddleCandidate<T>,
    previous: Option<SaddleCandidate<T>>,
}

fn check_grid<T: Real>(tau: &[T]) -> Result<()> {
    if tau.first() != Some(&T::zero()) || tau.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("saddle grid must start at 0 and increase".into()));
    }
    Ok(())
}

/// Finds and continues saddle families over the grid.
pub fn sweep_saddles<T: Real>(
    search: &SaddleSearch<T>,
    state: &CoherentState<T>,
    tau_grid: &[T],
    opts: &SweepOptions<T>,
) -> Result<SaddleInventory<T>> {
    check_grid(tau_grid)?;
    let ensemble: Option<TwaEnsemble<T>> = if opts.reseed_every > 0 && tau_grid.len() > 1 {
        let sampler = WignerSampler::new(state.clone(), opts.rng_seed, opts.seeding_samples);
        Some(propagate_ensemble(&sampler, &search.config, tau_grid, &opts.ensemble_integrator)?)
    } else {
        None
    };

    let trivial = search.trivial()?;
    let mut next_family = 1;
    let mut terminated = Vec::new();
    let mut entries = Vec::with_capacity(tau_grid.len());
    let mut active: Vec<Active<T>> = Vec::new();

    for (k, &tau) in tau_grid.iter().enumerate() {
        let mut cands: Vec<SaddleCandidate<T>> = Vec::new();
        let mut seeds_tried = 0;
        let mut clusters = 0;
        if k == 0 {
            cands.push(trivial.clone());
        } else {
            let dtau = tau - tau_grid[k - 1];
            let continued: Vec<Result<SaddleCandidate<T>>> = active
                .par_iter()
                .map(|a| search.continue_in_time(&a.current, a.previous.as_ref(), dtau))
                .collect();
            for (a, res) in active.iter().zip(continued) {
                match res {
                    Ok(mut c) => {
                        c.parent = Some(k - 1);
                        cands.push(c);
                    }
                    Err(e) => {
                        log::debug!("family {} terminated at tau = {tau}: {e}", a.current.family());
                        terminated.push((a.current.family(), k));
                    }
                }
            }
            if let Some(ens) = ensemble.as_ref().filter(|_| k % opts.reseed_every == 0) {
                let seeds = generate_real_seeds(&search.manifold, ens, k, &opts.seeds);
                clusters = seeds.len();
                seeds_tried = seeds.len();
                let known: Vec<&[Complex<T>]> = cands.iter().map(|c| c.p0.as_slice()).collect();
                let found: Vec<Option<SaddleCandidate<T>>> = seeds
                    .par_iter()
                    .map(|s| {
                        let prov = vec![Provenance {
                            family: 0,
                            root: SeedOrigin::RealPathway {
                                tau_index: k,
                                cluster: s.cluster,
                            },
                            born: k,
                        }];
                        search
                            .refine_seed(&s.p0, tau, prov, opts.seeds.max_seed_distance, &known, opts.match_tol)
                            .ok()
                            .flatten()
                    })
                    .collect();
                // seeds may still coincide with each other
                for mut c in found.into_iter().flatten() {
                    let known = cands
                        .iter()
                        .any(|e| e.p0.iter().zip(&c.p0).all(|(a, b)| (*a - *b).norm() < opts.dedup_tol));
                    if !known {
                        c.provenance[0].family = next_family;
                        next_family += 1;
                        cands.push(c);
                    }
                }
            }
        }
        let mut merged = deduplicate(cands, opts.dedup_tol);
        if merged.len() > opts.max_families {
            log::warn!(
                "{} saddle families at tau = {tau}; keeping the {} oldest",
                merged.len(),
                opts.max_families
            );
            merged.sort_by_key(|c| c.family());
            merged.truncate(opts.max_families);
        }
        canonical_sort(&mut merged);

        let previous: Vec<(usize, SaddleCandidate<T>)> =
            active.drain(..).map(|a| (a.current.family(), a.current)).collect();
        active = merged
            .iter()
            .map(|c| Active {
                current: c.clone(),
                previous: previous.iter().find(|(f, _)| *f == c.family()).map(|(_, p)| p.clone()),
            })
            .collect();

        let filtered = filter_contributing(merged, opts.growth_bound);
        let (saddles, contributions) = filtered.kept.into_iter().unzip();
        entries.push(InventoryEntry {
            tau,
            saddles,
            contributions,
            discarded: if opts.keep_discarded { filtered.discarded } else { Vec::new() },
            seeds_tried,
            clusters,
        });
    }
    Ok(SaddleInventory {
        entries,
        families: next_family,
        terminated,
    })
}
