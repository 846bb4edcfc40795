use std::sync::Arc;

use rayon::prelude::*;

use super::fixed_point::{implicit_step_fixed_point, FixedPointOutcome};
use super::mean_and_se;
use super::semilinear::{accumulate_residuals, check_contraction, check_fixed_points, fit_z, terminal_values};
use super::solution::{BackwardSolution, Feedback, SchemeMode, SolverOptions, StepRecord};
use crate::engine::{ControlGrid, PathBatch};
use crate::error::{invalid, Error, Result};
use crate::problems::HjbProblem;
use crate::regression::{argmax_by, BasisEval, BasisSpec, Design};

/// Value of the fitted `𝒴`-function at `(x, a)`: the refit when present,
/// otherwise the continuation fit (plus the implicit driver step).
pub(crate) fn sup_objective(
    problem: &HjbProblem,
    step: &StepRecord,
    options: &SolverOptions,
    dt: f64,
    x: &[f64],
    a: &[f64],
) -> std::result::Result<f64, FixedPointOutcome> {
    let mut scratch = SupScratch::new(step.y_fit.basis());
    scratch.value(problem, step, options, dt, x, a)
}

struct SupScratch<'a> {
    eval: BasisEval<'a>,
    phi: Vec<f64>,
    z: Vec<f64>,
}

impl<'a> SupScratch<'a> {
    fn new(basis: &'a BasisSpec) -> Self {
        Self {
            eval: basis.evaluator(),
            phi: vec![0.0; basis.len()],
            z: Vec::new(),
        }
    }

    fn value(
        &mut self,
        problem: &HjbProblem,
        step: &StepRecord,
        options: &SolverOptions,
        dt: f64,
        x: &[f64],
        a: &[f64],
    ) -> std::result::Result<f64, FixedPointOutcome> {
        self.eval.eval(x, a, &mut self.phi);
        if let Some(refit) = &step.sup_fit {
            return Ok(refit.dot(&self.phi));
        }
        let cont = step.y_fit.dot(&self.phi);
        match options.mode {
            SchemeMode::Explicit => Ok(cont),
            SchemeMode::Implicit => {
                self.z.clear();
                self.z.extend(step.z_fits.iter().map(|f| f.dot(&self.phi)));
                let z = &self.z;
                let driver = problem.driver.as_ref();
                let out = implicit_step_fixed_point(cont, dt, &options.fixed_point, |y| driver(x, a, y, z));
                if out.converged {
                    Ok(out.value)
                } else {
                    Err(out)
                }
            }
        }
    }
}

/// Standard error of `Y_0` from the regression residuals, each weighted by
/// its sensitivity `Λ` on `Y_0`. The sensitivities run forward from
/// `Λ_0 = 1`: a continuation target of sample `p` moves the fit by
/// `(ΦᵀΦ)⁺φ_p`, which reaches `Y_0` through the maximisers of the previous
/// step.
fn propagated_se(
    paths: &PathBatch,
    basis: &BasisSpec,
    controls: &[f64],
    k: usize,
    residuals: &[Vec<f64>],
    grams: &[Vec<f64>],
) -> f64 {
    let n_paths = paths.n_paths();
    let n = residuals.len();
    let cols = basis.len();
    let mut lambda = vec![1.0; n_paths];
    let mut total = vec![0.0; n_paths];
    let mut eval = basis.evaluator();
    let mut phi = vec![0.0; cols];
    for i in 0..n {
        let mut direction = vec![0.0; cols];
        for p in 0..n_paths {
            eval.eval(
                paths.state(p, i),
                &controls[(p * n + i) * k..(p * n + i + 1) * k],
                &mut phi,
            );
            for (d, v) in direction.iter_mut().zip(&phi) {
                *d += lambda[p] * v;
            }
        }
        let c: Vec<f64> = (0..cols)
            .map(|r| (0..cols).map(|l| grams[i][r * cols + l] * direction[l]).sum())
            .collect();
        for p in 0..n_paths {
            let regime = paths.regime(p, i).expect("regime-switching batch");
            eval.eval(paths.state(p, i), regime, &mut phi);
            lambda[p] = phi.iter().zip(&c).map(|(a, b)| a * b).sum();
            total[p] += lambda[p] * residuals[i][p];
        }
    }
    mean_and_se(&total).1
}

/// Randomized-control scheme for the HJB equation on regime-switching Euler
/// paths `(X^π, I)`.
///
/// Each step regresses `𝒵_{t_i}` and the continuation of `Y_{t_{i+1}}` on
/// the basis over `(X_{t_i}, I_{t_i})`, forms `𝒴_{t_i}` with the driver term,
/// and sets `Y_{t_i} = max_a 𝒴(X_{t_i}, a)` over the control grid, recording
/// the maximiser as the feedback control `â_i(X_{t_i})`.
pub fn hjb_backward_solve(
    problem: &HjbProblem,
    paths: &PathBatch,
    basis: &Arc<BasisSpec>,
    control_grid: &ControlGrid,
    options: &SolverOptions,
) -> Result<BackwardSolution> {
    problem.validate()?;
    options.validate()?;
    let Some(k) = paths.control_dim() else {
        return Err(invalid("HJB solve needs regime-switching paths"));
    };
    if k != problem.control_dim() || control_grid.dim() != k {
        return Err(invalid("control dimensions of problem, paths and grid disagree"));
    }
    if paths.state_dim() != problem.state_dim || paths.noise_dim() != problem.noise_dim {
        return Err(invalid("paths were not simulated for this problem's dimensions"));
    }
    if basis.state_dim() != problem.state_dim {
        return Err(invalid("basis state dimension differs from the problem's"));
    }
    if control_grid.is_empty() {
        return Err(invalid("control grid is empty"));
    }
    let grid = paths.grid();
    let n = grid.len();
    let n_paths = paths.n_paths();
    let m = problem.noise_dim;
    check_contraction(problem.lipschitz, grid.modulus(), options.mode);

    let mut y_paths = vec![0.0; n_paths * (n + 1)];
    let mut z_paths = vec![0.0; n_paths * n * m];
    let mut controls = vec![0.0; n_paths * n * k];
    let mut y_next = terminal_values(problem.terminal.as_ref(), paths)?;
    for (p, v) in y_next.iter().enumerate() {
        y_paths[p * (n + 1) + n] = *v;
    }

    let driver = problem.driver.as_ref();
    let regime = |p: usize, i: usize| paths.regime(p, i).expect("regime-switching batch");
    let mut steps = Vec::with_capacity(n);
    let mut residuals_by_step = Vec::with_capacity(n);
    let mut gram_by_step = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let dt = grid.step(i);
        let design = Design::from_samples(basis, n_paths, |p| (paths.state(p, i), regime(p, i)))?;
        let clamped: Vec<f64> = y_next.iter().map(|&v| options.clamp(v)).collect();
        let cont_fit = design.solve(&clamped)?;
        let cont = design.predict(&cont_fit);
        let z_fits = fit_z(&design, paths, &clamped, &cont, i, &mut z_paths)?;
        let z_of = |p: usize| &z_paths[(p * n + i) * m..(p * n + i + 1) * m];

        let mut step_residuals = vec![0.0; n_paths];
        // continuation fit and realised 𝒴 at the sampled regimes
        let (y_fit, realised, iterations) = match options.mode {
            SchemeMode::Implicit => {
                accumulate_residuals(&mut step_residuals, &clamped, &cont);
                let outcomes: Vec<FixedPointOutcome> = (0..n_paths)
                    .into_par_iter()
                    .map(|p| {
                        let (x, a, z) = (paths.state(p, i), regime(p, i), z_of(p));
                        implicit_step_fixed_point(cont[p], dt, &options.fixed_point, |y| driver(x, a, y, z))
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
                    .map(|p| {
                        let (x, a) = (paths.state(p, i), regime(p, i));
                        options.clamp(y_next[p] + driver(x, a, y_next[p], z_of(p)) * dt)
                    })
                    .collect();
                let fit = design.solve(&targets)?;
                let values = design.predict(&fit);
                accumulate_residuals(&mut step_residuals, &targets, &values);
                (fit, values, 0)
            }
        };
        let sup_fit = if options.refit_sup && options.mode == SchemeMode::Implicit {
            Some(design.solve(&realised)?)
        } else {
            None
        };
        let mut record = StepRecord {
            effective_rank: y_fit.effective_rank(),
            y_fit,
            z_fits,
            sup_fit,
            fixed_point_iterations: iterations,
            y_mean: 0.0,
            y_se: 0.0,
        };

        let maximised: Vec<std::result::Result<(Vec<f64>, f64), FixedPointOutcome>> = (0..n_paths)
            .into_par_iter()
            .map_init(
                || SupScratch::new(basis),
                |scratch, p| {
                    let x = paths.state(p, i);
                    let mut failed = None;
                    let (a, v) = argmax_by(control_grid, options.argmax, |a| {
                        match scratch.value(problem, &record, options, dt, x, a) {
                            Ok(v) => v,
                            Err(out) => {
                                failed.get_or_insert(out);
                                f64::NAN
                            }
                        }
                    });
                    match failed {
                        Some(out) => Err(out),
                        None => Ok((a, v)),
                    }
                },
            )
            .collect();
        let mut y_now = Vec::with_capacity(n_paths);
        for (p, result) in maximised.into_iter().enumerate() {
            match result {
                Ok((a, v)) => {
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            path: p,
                            step: i,
                            what: "maximised backward value",
                        });
                    }
                    controls[(p * n + i) * k..(p * n + i + 1) * k].copy_from_slice(&a);
                    y_now.push(v);
                }
                Err(out) => {
                    return Err(Error::FixedPoint {
                        step: i,
                        path: p,
                        iterations: out.iterations,
                        gap: out.gap,
                    })
                }
            }
        }
        for (p, v) in y_now.iter().enumerate() {
            y_paths[p * (n + 1) + i] = *v;
        }
        residuals_by_step.push(step_residuals);
        gram_by_step.push(design.gram_pseudo_inverse());
        let (y_mean, y_se) = mean_and_se(&y_now);
        record.y_mean = y_mean;
        record.y_se = y_se;
        steps.push(record);
        y_next = y_now;
    }
    steps.reverse();
    residuals_by_step.reverse();
    gram_by_step.reverse();

    let y0 = steps[0].y_mean;
    let y0_se = if control_grid.len() == 1 {
        // a single control point leaves every sensitivity at exactly one
        let mut sum = vec![0.0; n_paths];
        for step in residuals_by_step.iter().rev() {
            for (s, r) in sum.iter_mut().zip(step) {
                *s += r;
            }
        }
        mean_and_se(&sum).1
    } else {
        propagated_se(paths, basis, &controls, k, &residuals_by_step, &gram_by_step)
    };
    let y0_regression = {
        let x0 = &problem.x0;
        let record = &steps[0];
        let mut scratch = SupScratch::new(basis);
        let (_, v) = argmax_by(control_grid, options.argmax, |a| {
            scratch
                .value(problem, record, options, grid.step(0), x0, a)
                .unwrap_or(f64::NAN)
        });
        v
    };
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
        controls: Some((k, controls)),
        feedback: Some(Feedback {
            grid: control_grid.clone(),
            options: options.clone(),
            dt: grid.steps().to_vec(),
        }),
    })
}
