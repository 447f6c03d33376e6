//! Coherent-state density waves in Bose-Hubbard rings, propagated three ways:
//! exactly in number-conserving Fock sectors, in the truncated Wigner
//! approximation, and as a coherent sum over complex saddle mean-field
//! trajectories. Autocorrelation functions and their windowed Fourier
//! spectra are the common currency.
//!
//! The classical, semiclassical and spectral code is generic over
//! [`Real`](scalar::Real); the aliases at the crate root fix it to `f64`.

// negated comparisons below reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flow;
pub mod linalg;
pub mod model;
pub mod phase;
pub mod quantum;
pub mod saddle;
pub mod semiclassical;
pub mod scalar;
pub mod series;
pub mod spectroscopy;
pub mod twa;

pub use error::{Error, Result};
pub use num_complex::Complex;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Lattice = model::LatticeConfig<f64>;
pub type State = model::CoherentState<f64>;
pub type Trajectory = flow::ComplexTrajectory<f64>;
pub type Integrator = flow::IntegratorOptions<f64>;
