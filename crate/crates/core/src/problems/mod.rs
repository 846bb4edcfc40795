//! Problem definitions and independent oracles: closed forms, quadrature,
//! manufactured solutions and exhaustive open-loop control enumeration.

mod brute_force;
mod manufactured;
mod oracles;
mod registry;
mod types;

pub use brute_force::{brute_force_control_value, BruteForceValue, BRUTE_FORCE_LIMIT};
pub use manufactured::{manufactured_semilinear, BaseDynamics, ExpSine, SmoothTarget};
pub use oracles::{
    g_operator, gaussian_expectation, heat_reference, linear_bsde_reference, uncertain_vol_reference, OracleValue,
};
pub use registry::{
    build_problem, hjb_tiny_reward, oracle_value, OracleReport, OracleSettings, Problem, ProblemParams, PROBLEM_NAMES,
};
pub use types::{
    ControlledDriver, ControlledField, Driver, FnReference, HjbProblem, LinearDriverSpec, Reference, SemilinearProblem,
    StateField, Terminal,
};
