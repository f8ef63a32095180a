//! Numerical toolkit for multi-peak solutions of the coupled nonlinear
//! Schrödinger system -ε²Δu + P u = μ₁u³ + βuv², -ε²Δv + Q v = μ₂v³ + βu²v
//! in ℝ³: radial ground states, ring ansatz construction, reduced energy
//! landscapes, damped-Newton 3D field solves, linearized spectra, and
//! Pohozaev / decay diagnostics.
//!
//! All field-level computation is carried out in rescaled coordinates
//! y = x/ε, where the operator reads -Δ + P(ε|y|) and peaks have unit width.
//! Ring radii, windows and grids are expressed in the same rescaled units.

pub mod ansatz;
pub mod diagnostics;
pub mod error;
pub mod field_solver;
pub mod grid;
pub mod ground_state;
pub mod linalg;
pub mod potentials;
pub mod reduced_energy;
pub mod spectral;

pub use error::{Error, Result};
pub use ground_state::{
    coupled_amplitudes, decay_constant, pair_interaction, radial_integrals, solve_ground_state,
    CoupledAmplitudes, GroundState,
};
pub use potentials::{builtin_potential, hessian_at_origin, tail_fit, PotentialModel};
