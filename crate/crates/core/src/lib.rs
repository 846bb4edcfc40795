//! Monte-Carlo solvers for parabolic PDEs through their backward stochastic
//! differential equation representations.
//!
//! The crate is organised bottom-up:
//!
//! - [`engine`]: time grids, counter-based random streams, Brownian increments,
//!   marked Poisson jumps and Euler forward schemes (plain and regime-switching).
//! - [`regression`]: least-squares fits on polynomial/indicator bases over
//!   `(x, a)` and grid maximisation over the control variable.
//! - [`solver`]: the backward Euler scheme for semilinear BSDEs, the
//!   randomized-control scheme for HJB equations, error metrics and
//!   convergence studies.
//! - [`problems`]: problem definitions, the named registry and independent
//!   oracles (quadrature, closed forms, brute-force control enumeration).

pub mod engine;
pub mod error;
pub mod problems;
pub mod regression;
pub mod solver;

pub use error::{Error, Result};
