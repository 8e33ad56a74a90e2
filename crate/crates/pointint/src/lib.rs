//! Point interactions with a moving center in three dimensions.
//!
//! Closed-form resolvent kernels and Gamma functions for the drifted point
//! interaction, a periodic-grid realization as a renormalized rank-one
//! perturbation of the spectral Hamiltonian, the associated quadratic forms,
//! spectral diagnostics, and a comoving-frame Cayley propagator with
//! lab-frame reconstruction.

pub mod error;
pub mod types;
pub mod scalar;
pub mod par;
pub mod grid;
pub mod hamiltonian;
pub mod forms;
pub mod spectral;
pub mod trajectory;
pub mod propagator;
pub mod cli;

pub use error::{Error, Result};
