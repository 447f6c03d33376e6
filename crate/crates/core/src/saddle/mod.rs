//! Complex saddle trajectories joining the initial and final Lagrangian
//! manifolds, seeded from real transport pathways and continued in time.
//!
//! The search is parameterized by the free momentum `p_0` alone; the initial
//! manifold fixes `q_0 = q_c - i p_0`.

mod manifold;
mod newton;
mod search;
mod seeds;

pub use manifold::{final_residual, ManifoldParameterization};
pub use newton::{newton_refine, residual_jacobian, NewtonOptions, NewtonOutcome};
pub use search::{
    canonical_cmp, canonical_sort, deduplicate, filter_contributing, sweep_saddles, DiscardReason, Discarded,
    Filtered, InventoryEntry, Provenance, SaddleCandidate, SaddleInventory, SaddleSearch, SeedOrigin, SweepOptions,
};
pub use seeds::{generate_real_seeds, pathway_score, RealSeed, SeedOptions};
