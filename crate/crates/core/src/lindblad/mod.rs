//! Lindblad models: Hamiltonian plus detailed-balance baths, the generator
//! `-(i/ħ)[H, ρ] + Σ γ (L ρ L† - ½{L†L, ρ})`, RK4 time evolution and
//! steady-state search.

pub(crate) mod dynamics;
mod model;
mod state;
pub mod text;
mod validate;

pub use dynamics::{evolve, stability_bound, steady_state, EvolutionConfig, Propagator, SteadyState, Trajectory};
pub use model::{apply_dissipator, apply_generator, Bath, JumpChannel, LindbladModel};
pub use state::{DensityMatrix, StateTolerances};
pub use validate::{validate_model, CheckResult, ValidationReport};
