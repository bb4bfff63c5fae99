//! Simulation and analysis of a continuous time crystal that arises from
//! self-organized bistability in a driven-dissipative contact process.
//!
//! The crate is organized by task:
//!
//! * [`model`]: parameters, coupling coefficients and mean-field analysis;
//! * [`lattice`]: the stochastic field equations on periodic lattices;
//! * [`observables`]: correlations, spectra, jumps and coherence time;
//! * [`avalanche`]: space-time activation clusters and king avalanches;
//! * [`potential`]: mean-field and simulated effective potentials.

pub mod avalanche;
mod error;
pub mod lattice;
pub mod model;
pub mod observables;
pub mod output;
pub mod potential;
pub mod rng;

pub use avalanche::AvalancheStats;
pub use error::{Error, Result};
pub use lattice::{FieldState, Geometry, LatticeConfig, RunOutput, SeriesPoint};
pub use model::{Couplings, FixedPoint, ModelParams, Stability};
pub use observables::JumpEvent;
