//! Backward dynamic-programming passes over simulated paths.
//!
//! Conditional expectations given `X_{t_i}` (or `(X_{t_i}, I_{t_i})`) are
//! least-squares regressions on the basis; the time loop runs backward
//! sequentially while per-path work inside a step runs on rayon.

mod fixed_point;
mod hjb;
mod metric;
mod semilinear;
mod solution;
mod study;

pub use fixed_point::{implicit_step_fixed_point, FixedPointOptions, FixedPointOutcome};
pub use hjb::hjb_backward_solve;
pub use metric::{compute_error_metric, ErrorReport, ZQuadrature};
pub use semilinear::backward_semilinear_solve;
pub use solution::{BackwardSolution, SchemeMode, SolverOptions, StepRecord};
pub use study::{
    convergence_study, convergence_study_with, log_log_slope, simulate_and_solve_hjb, simulate_and_solve_semilinear,
    StudyConfig, StudyPoint, StudyTable,
};

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
