use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("interaction-free: timescales undefined (U = 0)")]
    InteractionFree,

    #[error("occupied sites have different mean occupations ({0} vs {1})")]
    NonUniformOccupation(f64, f64),

    #[error("sector too large: {n_sites} sites, {n_particles} particles gives dimension {dimension} (cap {cap})")]
    SectorTooLarge {
        n_sites: usize,
        n_particles: usize,
        dimension: usize,
        cap: usize,
    },

    #[error("sector of dimension {dimension} too large for a dense eigensolve (cap {cap}); use the windowed Fourier transform of A(tau) instead")]
    DenseSolveTooLarge { dimension: usize, cap: usize },

    #[error("Krylov propagation did not converge at tau = {tau} (error estimate {estimate:e})")]
    KrylovNonConvergence { tau: f64, estimate: f64 },

    #[error("trajectory diverged at tau = {escape_time}")]
    TrajectoryDiverged { escape_time: f64 },

    #[error("Newton iteration failed after {iterations} iterations (best residual {best_residual:e})")]
    NewtonDiverged { iterations: usize, best_residual: f64 },

    #[error("caustic encountered: |det D| = {0:e}")]
    Caustic(f64),

    #[error("time grid is not uniform or does not start at 0")]
    NonUniformGrid,

    #[error("cross-correlation has no structure inside the search window")]
    FlatCorrelation,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
}
