//! Numerical laboratory for quantum scattering by `H = -Δ + v`.
//!
//! Units: ħ = 1, 2m = 1, so energies are `λ = k²`.

pub mod born;
pub mod cli;
pub mod diagnostics;
pub mod eikonal;
pub mod error;
pub mod numerics;
pub mod partialwave;
pub mod potentials;
pub mod propagator;

pub use error::{Result, ScatterError};
pub use potentials::{PotentialKind, PotentialModel};
