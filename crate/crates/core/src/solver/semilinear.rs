use std::sync::Arc;

use log::warn;
use rayon::prelude::*;

use super::fixed_point::{implicit_step_fixed_point, FixedPointOutcome};
use super::mean_and_se;
use super::solution::{BackwardSolution, SchemeMode, SolverOptions, StepRecord};
use crate::engine::PathBatch;
use crate::error::{invalid, Error, Result};
use crate::problems::SemilinearProblem;
use crate::regression::{BasisSpec, Design, FitFunction};

pub(crate) fn terminal_values(terminal: &(dyn Fn(&[f64]) -> f64 + Send + Sync), paths: &PathBatch) -> Result<Vec<f64>> {
    let n = paths.grid().len();
    let values: Vec<f64> = (0..paths.n_paths())
        .into_par_iter()
        .map(|p| terminal(paths.state(p, n)))
        .collect();
    if let Some(p) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            path: p,
            step: n,
            what: "terminal condition",
        });
    }
    Ok(values)
}

/// Regresses `(Y_{i+1} − Ê[Y_{i+1} | X_{t_i}]) ΔW^j / Δt` for every Brownian
/// coordinate `j` and writes the fitted `Z^π_{t_i}` into `z_paths`. The
/// subtracted continuation has zero conditional covariance with `ΔW`, so it
/// only removes variance.
pub(crate) fn fit_z(
    design: &Design,
    paths: &PathBatch,
    y_next: &[f64],
    continuation: &[f64],
    i: usize,
    z_paths: &mut [f64],
) -> Result<Vec<FitFunction>> {
    let n = paths.grid().len();
    let m = paths.noise_dim();
    let dt = paths.grid().step(i);
    let mut fits = Vec::with_capacity(m);
    for j in 0..m {
        let targets: Vec<f64> = (0..paths.n_paths())
            .into_par_iter()
            .map(|p| (y_next[p] - continuation[p]) * paths.increment(p, i)[j] / dt)
            .collect();
        let fit = design.solve(&targets)?;
        for (p, z) in design.predict(&fit).into_iter().enumerate() {
            z_paths[(p * n + i) * m + j] = z;
        }
        fits.push(fit);
    }
    Ok(fits)
}

pub(crate) fn check_fixed_points(outcomes: &[FixedPointOutcome], step: usize) -> Result<usize> {
    if let Some(p) = outcomes.iter().position(|o| !o.converged) {
        return Err(Error::FixedPoint {
            step,
            path: p,
            iterations: outcomes[p].iterations,
            gap: outcomes[p].gap,
        });
    }
    Ok(outcomes.iter().map(|o| o.iterations).max().unwrap_or(0))
}

pub(crate) fn accumulate_residuals(sum: &mut [f64], targets: &[f64], fitted: &[f64]) {
    for ((s, t), f) in sum.iter_mut().zip(targets).zip(fitted) {
        *s += t - f;
    }
}

pub(crate) fn check_contraction(lipschitz: f64, modulus: f64, mode: SchemeMode) {
    if mode == SchemeMode::Implicit && lipschitz * modulus >= 1.0 {
        warn!(
            "Δt·C_f = {:.3} ≥ 1: the implicit fixed point may not contract",
            lipschitz * modulus
        );
    }
}

/// Backward Euler scheme for the semilinear BSDE on Euler paths of the
/// problem's forward diffusion.
///
/// From `Y_{t_n} = h(X_{t_n})`, each step regresses
/// `Z_{t_i} = Ê[Y_{t_{i+1}}ΔW_{t_i}/Δt_i | X_{t_i}]` and then either solves
/// `Y_{t_i} = Ê[Y_{t_{i+1}} | X_{t_i}] + f(X_{t_i}, Y_{t_i}, Z_{t_i})Δt_i`
/// pathwise by fixed point (implicit) or regresses
/// `Y_{t_{i+1}} + f(X_{t_i}, Y_{t_{i+1}}, Z_{t_i})Δt_i` (explicit).
pub fn backward_semilinear_solve(
    problem: &SemilinearProblem,
    paths: &PathBatch,
    basis: &Arc<BasisSpec>,
    options: &SolverOptions,
) -> Result<BackwardSolution> {
    problem.validate()?;
    options.validate()?;
    if paths.state_dim() != problem.state_dim || paths.noise_dim() != problem.noise_dim {
        return Err(invalid("paths were not simulated for this problem's dimensions"));
    }
    if basis.state_dim() != problem.state_dim {
        return Err(invalid("basis state dimension differs from the problem's"));
    }
    let grid = paths.grid();
    let n = grid.len();
    let n_paths = paths.n_paths();
    let m = problem.noise_dim;
    check_contraction(problem.lipschitz, grid.modulus(), options.mode);

    let mut y_paths = vec![0.0; n_paths * (n + 1)];
    let mut z_paths = vec![0.0; n_paths * n * m];
    let mut y_next = terminal_values(problem.terminal.as_ref(), paths)?;
    for (p, v) in y_next.iter().enumerate() {
        y_paths[p * (n + 1) + n] = *v;
    }

    let driver = problem.driver.as_ref();
    let mut steps = Vec::with_capacity(n);
    // Σ_i of the continuation residuals per path, for the Y_0 standard error
    let mut residual_sum = vec![0.0; n_paths];
    let mut y0_regression = f64::NAN;
    for i in (0..n).rev() {
        let dt = grid.step(i);
        let design = Design::from_samples(basis, n_paths, |p| (paths.state(p, i), &[][..]))?;
        let clamped: Vec<f64> = y_next.iter().map(|&v| options.clamp(v)).collect();
        let cont_fit = design.solve(&clamped)?;
        let cont = design.predict(&cont_fit);
        let z_fits = fit_z(&design, paths, &clamped, &cont, i, &mut z_paths)?;
        let z_of = |p: usize| &z_paths[(p * n + i) * m..(p * n + i + 1) * m];

        let (y_fit, y_now, iterations) = match options.mode {
            SchemeMode::Implicit => {
                accumulate_residuals(&mut residual_sum, &clamped, &cont);
                let outcomes: Vec<FixedPointOutcome> = (0..n_paths)
                    .into_par_iter()
                    .map(|p| {
                        let x = paths.state(p, i);
                        let z = z_of(p);
                        implicit_step_fixed_point(cont[p], dt, &options.fixed_point, |y| driver(x, y, z))
                    })
                    .collect();
                let iterations = check_fixed_points(&outcomes, i)?;
                (
                    cont_fit,
                    outcomes.iter().map(|o| o.value).collect::<Vec<_>>(),
                    iterations,
                )
            }
            SchemeMode::Explicit => {
                let targets: Vec<f64> = (0..n_paths)
                    .into_par_iter()
                    .map(|p| options.clamp(y_next[p] + driver(paths.state(p, i), y_next[p], z_of(p)) * dt))
                    .collect();
                let fit = design.solve(&targets)?;
                let values = design.predict(&fit);
                accumulate_residuals(&mut residual_sum, &targets, &values);
                (fit, values, 0)
            }
        };
        if let Some(p) = y_now.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                path: p,
                step: i,
                what: "backward value",
            });
        }
        for (p, v) in y_now.iter().enumerate() {
            y_paths[p * (n + 1) + i] = *v;
        }
        if i == 0 {
            let x0 = &problem.x0;
            let z0: Vec<f64> = z_fits.iter().map(|f| f.evaluate(x0, &[])).collect();
            let cont0 = y_fit.evaluate(x0, &[]);
            y0_regression = match options.mode {
                SchemeMode::Implicit => {
                    implicit_step_fixed_point(cont0, dt, &options.fixed_point, |y| driver(x0, y, &z0)).value
                }
                SchemeMode::Explicit => cont0,
            };
        }
        let (y_mean, y_se) = mean_and_se(&y_now);
        steps.push(StepRecord {
            effective_rank: y_fit.effective_rank(),
            y_fit,
            z_fits,
            sup_fit: None,
            fixed_point_iterations: iterations,
            y_mean,
            y_se,
        });
        y_next = y_now;
    }
    steps.reverse();

    let y0 = steps[0].y_mean;
    let (_, y0_se) = mean_and_se(&residual_sum);
    Ok(BackwardSolution {
        mode: options.mode,
        n_paths,
        n_steps: n,
        noise_dim: m,
        y0,
        y0_se,
        y0_regression,
        steps,
        y_paths,
        z_paths,
        controls: None,
        feedback: None,
    })
}
