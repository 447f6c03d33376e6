//! JSON form of a saddle inventory, and the way back to contributions.

use bhsc::flow::integrate;
use bhsc::saddle::{DiscardReason, Provenance, SaddleInventory, SaddleSearch};
use bhsc::semiclassical::{contribution, SaddleContribution};
use bhsc::Complex;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleRecord {
    pub family: usize,
    pub p0: Vec<Complex<f64>>,
    pub residual: f64,
    pub action: Complex<f64>,
    pub det_branch_phase: f64,
    pub max_branch_step: f64,
    /// Full exponent `i phi`.
    pub phase: Complex<f64>,
    /// `c^{1/2}` on the tracked branch.
    pub amplitude: Complex<f64>,
    pub value: Complex<f64>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub family: usize,
    pub p0: Vec<Complex<f64>>,
    pub residual: f64,
    #[serde(flatten)]
    pub reason: DiscardReason<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub tau: f64,
    pub seeds_tried: usize,
    pub clusters: usize,
    pub saddles: Vec<SaddleRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discarded: Vec<DiscardRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryRecord {
    pub n_sites: usize,
    pub families: usize,
    /// `(family, grid index)` at which continuation failed.
    pub terminated: Vec<(usize, usize)>,
    pub entries: Vec<EntryRecord>,
}

impl InventoryRecord {
    pub fn from_inventory(inv: &SaddleInventory<f64>, n_sites: usize) -> Self {
        let entries = inv
            .entries
            .iter()
            .map(|e| EntryRecord {
                tau: e.tau,
                seeds_tried: e.seeds_tried,
                clusters: e.clusters,
                saddles: e
                    .saddles
                    .iter()
                    .zip(&e.contributions)
                    .map(|(s, c)| SaddleRecord {
                        family: s.family(),
                        p0: s.p0.clone(),
                        residual: s.residual,
                        action: s.trajectory.action,
                        det_branch_phase: s.trajectory.det_branch_phase,
                        max_branch_step: s.trajectory.max_branch_step,
                        phase: c.phase,
                        amplitude: c.amplitude,
                        value: c.value(),
                        provenance: s.provenance.clone(),
                    })
                    .collect(),
                discarded: e
                    .discarded
                    .iter()
                    .map(|d| DiscardRecord {
                        family: d.candidate.family(),
                        p0: d.candidate.p0.clone(),
                        residual: d.candidate.residual,
                        reason: d.reason.clone(),
                    })
                    .collect(),
            })
            .collect();
        Self {
            n_sites,
            families: inv.families,
            terminated: inv.terminated.clone(),
            entries,
        }
    }

    pub fn tau(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.tau).collect()
    }

    /// Re-integrates every recorded saddle and rebuilds its contribution.
    pub fn contributions(&self, search: &SaddleSearch<f64>) -> Result<Vec<Vec<SaddleContribution<f64>>>, CliError> {
        if self.n_sites != search.manifold.n_sites() {
            return Err(CliError::Validation(vec![format!(
                "inventory has {} sites but [model].n_sites is {}",
                self.n_sites,
                search.manifold.n_sites()
            )]));
        }
        self.entries
            .iter()
            .map(|e| {
                e.saddles
                    .iter()
                    .map(|s| {
                        let traj = integrate(&search.manifold.initial_point(&s.p0), e.tau, &search.config, &search.integrator)
                            .map_err(CliError::engine("semiclassical"))?;
                        contribution(&traj).map_err(CliError::engine("semiclassical"))
                    })
                    .collect()
            })
            .collect()
    }
}
