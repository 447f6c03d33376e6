//! Real and complexified mean-field dynamics with action and stability matrix.

mod hamiltonian;
pub mod rk;
mod trajectory;

pub use hamiltonian::{flow_rhs, hamiltonian_value, total_number};
pub use trajectory::{
    integrate, integrate_checkpoints, integrate_real, ComplexTrajectory, IntegratorOptions, StabilityMatrix,
};
