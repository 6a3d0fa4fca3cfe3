//! Finite-time many-body quantum Otto refrigerator driven with variational
//! multi-spin counter-diabatic terms.
//!
//! The crate is organized bottom-up:
//!
//! - [`operator`]: symbolic Pauli algebra and dense realizations
//! - [`model`]: the driven Ising working medium and its sweep schedule
//! - [`agp`]: p-spin ansatz bases and the variational gauge-potential solver
//! - [`dynamics`]: Gibbs states and density-matrix propagation of a stroke
//! - [`cycle`]: the four-stroke cycle, its thermodynamic report and sweeps
//! - [`batch`]: configuration files, presets and CSV/JSON result tables
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod agp;
pub mod batch;
pub mod cycle;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod operator;

pub use error::{Error, Result};
