//! Forward simulation: grids, random streams, Brownian increments, marked
//! Poisson jumps and Euler schemes.
//!
//! Every sampler derives one independent counter-based stream per path from
//! `(seed, domain, path index)`, so batches are bitwise reproducible and do not
//! depend on how many rayon workers generate them.

mod brownian;
mod control;
mod euler;
mod grid;
mod poisson;
pub(crate) mod rng;

pub use brownian::{sample_brownian_increments, IncrementBatch};
pub use control::{ControlGrid, ControlSet};
pub use euler::{euler_diffusion, euler_regime_switching, ForwardModel, PathBatch, RegimeSwitchingModel};
pub use grid::TimeGrid;
pub use poisson::{simulate_marked_poisson, InitialRegime, IntensityMeasure, JumpTrajectory};
