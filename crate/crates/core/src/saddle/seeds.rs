use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::manifold::ManifoldParameterization;
use crate::phase::RealPhasePoint;
use crate::scalar::Real;
use crate::twa::TwaEnsemble;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedOptions<T> {
    /// Samples scoring below this are ignored.
    pub score_floor: T,
    /// Neighborhood radius in initial phase space for the clustering.
    pub bandwidth: T,
    /// Clusters kept, best first.
    pub max_seeds: usize,
    /// A saddle converging further than this from its seed (infinity norm
    /// in `p_0`) is not attributed to the pathway.
    pub max_seed_distance: T,
}

impl<T: Real> Default for SeedOptions<T> {
    fn default() -> Self {
        Self {
            score_floor: T::of(1e-2),
            bandwidth: T::of(1.0),
            max_seeds: 64,
            max_seed_distance: T::of(2.0),
        }
    }
}

/// Newton starting point derived from one real transport pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSeed<T> {
    pub p0: Vec<Complex<T>>,
    pub cluster: usize,
    pub score: T,
    pub members: usize,
}

/// `exp(-|z_tau - z_c|^2 / 2)`, the real proxy for the final-manifold distance.
pub fn pathway_score<T: Real>(z_tau: &RealPhasePoint<T>, center: &[T]) -> T {
    let d2: T = (0..z_tau.n_sites())
        .map(|j| {
            let dq = z_tau.q[j] - center[j];
            dq * dq + z_tau.p[j] * z_tau.p[j]
        })
        .sum();
    (-d2 * T::of(0.5)).exp()
}

fn dist2<T: Real>(a: &RealPhasePoint<T>, b: &RealPhasePoint<T>) -> T {
    (0..a.n_sites())
        .map(|j| {
            let dq = a.q[j] - b.q[j];
            let dp = a.p[j] - b.p[j];
            dq * dq + dp * dp
        })
        .sum()
}

/// Clusters the ensemble at grid index `k` by score and returns one seed per
/// local maximum.
///
/// Each sample above the floor links to the nearest better-scoring sample
/// within the bandwidth; samples with no such neighbor are the cluster
/// centers (quick-shift). Clusters are ordered by center score.
pub fn generate_real_seeds<T: Real>(
    manifold: &ManifoldParameterization<T>,
    ensemble: &TwaEnsemble<T>,
    k: usize,
    opts: &SeedOptions<T>,
) -> Vec<RealSeed<T>> {
    let center = manifold.center();
    let mut scored: Vec<(T, usize)> = ensemble
        .finals
        .iter()
        .enumerate()
        .filter_map(|(s, f)| f.as_ref().map(|path| (pathway_score(&path[k], center), s)))
        .filter(|(score, _)| *score >= opts.score_floor)
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let bw2 = opts.bandwidth * opts.bandwidth;
    // parent[i] indexes into `scored`; roots point to themselves
    let mut parent: Vec<usize> = (0..scored.len()).collect();
    for i in 0..scored.len() {
        let zi = &ensemble.initial[scored[i].1];
        let mut best: Option<(T, usize)> = None;
        for (j, &(_, s)) in scored[..i].iter().enumerate() {
            let d = dist2(zi, &ensemble.initial[s]);
            if d < bw2 && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        if let Some((_, j)) = best {
            parent[i] = j;
        }
    }
    let mut root = vec![0; scored.len()];
    let mut members: Vec<(usize, usize)> = Vec::new();
    for i in 0..scored.len() {
        // parents always precede children, so their root is already known
        root[i] = if parent[i] == i { i } else { root[parent[i]] };
        match members.iter_mut().find(|(r, _)| *r == root[i]) {
            Some(entry) => entry.1 += 1,
            None => members.push((root[i], 1)),
        }
    }
    members
        .into_iter()
        .take(opts.max_seeds)
        .enumerate()
        .map(|(cluster, (r, count))| RealSeed {
            p0: manifold.seed_from_real(&ensemble.initial[scored[r].1]),
            cluster,
            score: scored[r].0,
            members: count,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::IntegratorOptions;
    use crate::model::{CoherentState, LatticeConfig};
    use crate::twa::{propagate_ensemble, WignerSampler};

    #[test]
    fn single_cluster_before_the_packet_leaves() {
        let state = CoherentState::density_wave(4, 5.0).unwrap();
        let config = LatticeConfig::new(4, 0.2, 2.0).unwrap();
        let m = ManifoldParameterization::new(&state).unwrap();
        let ens = propagate_ensemble(
            &WignerSampler::new(state, 1, 2000),
            &config,
            &[0.0, 0.01],
            &IntegratorOptions::default(),
        )
        .unwrap();
        let opts = SeedOptions {
            bandwidth: 3.0,
            ..Default::default()
        };
        let seeds = generate_real_seeds(&m, &ens, 1, &opts);
        assert!(!seeds.is_empty());
        assert!(seeds[0].members > seeds.iter().skip(1).map(|s| s.members).sum::<usize>());
        assert!(seeds[0].p0.iter().all(|p| p.norm() < 1.0));
    }

    #[test]
    fn empty_when_nothing_returns() {
        let state = CoherentState::density_wave(2, 3.0).unwrap();
        let m = ManifoldParameterization::new(&state).unwrap();
        let config = LatticeConfig::new(2, 0.0, 0.0).unwrap();
        let ens = propagate_ensemble(&WignerSampler::new(state, 2, 100), &config, &[0.0], &IntegratorOptions::default())
            .unwrap();
        let opts = SeedOptions {
            score_floor: 2.0,
            ..Default::default()
        };
        assert!(generate_real_seeds(&m, &ens, 0, &opts).is_empty());
    }
}
