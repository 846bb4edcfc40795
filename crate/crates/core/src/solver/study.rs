use std::sync::Arc;

use super::hjb::hjb_backward_solve;
use super::metric::{compute_error_metric, ZQuadrature};
use super::semilinear::backward_semilinear_solve;
use super::solution::{BackwardSolution, SolverOptions};
use crate::engine::{
    euler_diffusion, euler_regime_switching, sample_brownian_increments, simulate_marked_poisson, ControlGrid,
    IntensityMeasure, PathBatch, TimeGrid,
};
use crate::error::{invalid, Result};
use crate::problems::{HjbProblem, SemilinearProblem};
use crate::regression::BasisSpec;

/// Simulates Euler paths on a uniform `n`-step grid and runs the semilinear
/// backward scheme on them.
pub fn simulate_and_solve_semilinear(
    problem: &SemilinearProblem,
    n: usize,
    n_paths: usize,
    seed: u64,
    basis: &Arc<BasisSpec>,
    options: &SolverOptions,
) -> Result<(PathBatch, BackwardSolution)> {
    let grid = TimeGrid::uniform(problem.horizon, n)?;
    let increments = sample_brownian_increments(&grid, problem.noise_dim, n_paths, seed)?;
    let paths = euler_diffusion(problem, &grid, &increments, &problem.x0)?;
    let solution = backward_semilinear_solve(problem, &paths, basis, options)?;
    Ok((paths, solution))
}

/// Simulates the marked Poisson regimes and the regime-switching Euler paths
/// from one seed, then runs the randomized HJB scheme.
pub fn simulate_and_solve_hjb(
    problem: &HjbProblem,
    n: usize,
    n_paths: usize,
    seed: u64,
    basis: &Arc<BasisSpec>,
    control_grid: &ControlGrid,
    options: &SolverOptions,
) -> Result<(PathBatch, BackwardSolution)> {
    let grid = TimeGrid::uniform(problem.horizon, n)?;
    let increments = sample_brownian_increments(&grid, problem.noise_dim, n_paths, seed)?;
    let intensity = IntensityMeasure::uniform(problem.control_set.clone(), problem.intensity)?;
    let jumps = simulate_marked_poisson(&intensity, problem.horizon, n_paths, seed)?;
    let paths = euler_regime_switching(problem, &grid, &increments, &jumps, &problem.x0)?;
    let solution = hjb_backward_solve(problem, &paths, basis, control_grid, options)?;
    Ok((paths, solution))
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPoint {
    pub n: usize,
    pub modulus: f64,
    pub y0: f64,
    pub se: f64,
    /// `ℰ(π)`, when a reference solution exists.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub points: Vec<StudyPoint>,
    /// Least-squares slope of `log ℰ` against `log |π|`; `None` when fewer
    /// than two rows have a positive finite error.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n_list: Vec<usize>,
    pub n_paths: usize,
    /// Independent replications per grid; rows average over them.
    pub seeds: Vec<u64>,
    pub basis: Arc<BasisSpec>,
    pub options: SolverOptions,
    /// Sub-intervals of the bridge quadrature for the `Z` error; `1` is the
    /// plain left-endpoint rule.
    pub z_substeps: usize,
}

/// Least-squares slope of `log y` on `log x` over the pairs with both
/// coordinates positive and finite.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite() && **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Runs `solve(n, seed) -> (Y_0, SE, ℰ)` for every grid size and seed and
/// fits the log-log rate.
pub fn convergence_study_with<F>(n_list: &[usize], horizon: f64, seeds: &[u64], mut solve: F) -> Result<StudyTable>
where
    F: FnMut(usize, u64) -> Result<(f64, f64, Option<f64>)>,
{
    if n_list.is_empty() || seeds.is_empty() {
        return Err(invalid("convergence study needs at least one grid size and one seed"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid sizes must be strictly increasing"));
    }
    let reps = seeds.len() as f64;
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let modulus = TimeGrid::uniform(horizon, n)?.modulus();
        let (mut y_sum, mut se_sq, mut err_sq) = (0.0, 0.0, Some(0.0));
        for &seed in seeds {
            let (y0, se, err) = solve(n, seed)?;
            y_sum += y0;
            se_sq += se * se;
            err_sq = match (err_sq, err) {
                (Some(acc), Some(e)) => Some(acc + e * e),
                _ => None,
            };
        }
        points.push(StudyPoint {
            n,
            modulus,
            y0: y_sum / reps,
            se: se_sq.sqrt() / reps,
            error: err_sq.map(|s| (s / reps).sqrt()),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().filter_map(|p| p.error.map(|e| (p.modulus, e))).unzip();
    let slope = log_log_slope(&xs, &ys);
    Ok(StudyTable { points, slope })
}

/// Convergence study of the semilinear scheme; `ℰ(π)` is reported when the
/// problem carries a reference solution.
pub fn convergence_study(problem: &SemilinearProblem, config: &StudyConfig) -> Result<StudyTable> {
    convergence_study_with(&config.n_list, problem.horizon, &config.seeds, |n, seed| {
        let (paths, solution) =
            simulate_and_solve_semilinear(problem, n, config.n_paths, seed, &config.basis, &config.options)?;
        let error = match &problem.reference {
            Some(reference) => {
                let quadrature = if config.z_substeps <= 1 {
                    ZQuadrature::LeftEndpoint
                } else {
                    ZQuadrature::Bridge {
                        model: problem,
                        substeps: config.z_substeps,
                        seed,
                    }
                };
                Some(compute_error_metric(reference.as_ref(), &solution, &paths, quadrature)?.total)
            }
            None => None,
        };
        Ok((solution.y0(), solution.y0_se(), error))
    })
}
