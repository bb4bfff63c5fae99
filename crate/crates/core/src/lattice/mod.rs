//! Spatially extended Langevin equations for the active and total densities on a
//! periodic hypercubic lattice, integrated by operator splitting: explicit
//! diffusion and higher-order reaction terms, then the exact linear-plus-sqrt-noise
//! kernel, then an Euler-Maruyama update of the total density.

mod geometry;
mod io;
pub mod kernel;
mod sim;

pub use geometry::Geometry;
pub use io::{
    read_checkpoint, read_series_csv, write_checkpoint, write_series_csv, Checkpoint, SeriesWriter, SnapshotReader,
    SnapshotWriter,
};
pub use kernel::{dornic_sample, linear_sde_moments};
pub use sim::{
    run, run_with_observer, step, FieldState, InitialCondition, LatticeConfig, Observer, Recorder, RunMeta, RunOutput,
    SeriesPoint, Simulation, Snapshot, StepConfig,
};
