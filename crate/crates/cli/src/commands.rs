use std::sync::Arc;

use bsde_core::engine::{ControlGrid, TimeGrid};
use bsde_core::problems::{build_problem, oracle_value, HjbProblem, OracleSettings, Problem};
use bsde_core::regression::BasisSpec;
use bsde_core::solver::{
    compute_error_metric, convergence_study, convergence_study_with, simulate_and_solve_hjb,
    simulate_and_solve_semilinear, BackwardSolution, StudyConfig, StudyTable, ZQuadrature,
};

use crate::config::RunConfig;
use crate::error::{config, CliError};
use crate::output::{float, optional, Report};

pub const RUN_HEADER: [&str; 6] = [
    "step",
    "t",
    "y_mean",
    "y_se",
    "effective_rank",
    "fixed_point_iterations",
];
pub const CONVERGE_HEADER: [&str; 6] = ["n", "modulus", "y0", "se", "error", "slope"];
pub const ORACLE_HEADER: [&str; 4] = ["problem", "method", "value", "tolerance"];

/// Runs the command named in `cfg.command` on the current rayon pool.
pub fn dispatch(cfg: &RunConfig) -> Result<Report, CliError> {
    match cfg.command.as_str() {
        "run" => cmd_run(cfg),
        "converge" => cmd_converge(cfg),
        "oracle" => cmd_oracle(cfg),
        other => Err(config(format!("unknown command `{other}`"))),
    }
}

/// Errors raised while assembling a problem or basis come from the
/// configuration rather than from the solver.
fn setup<T>(r: bsde_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        bsde_core::Error::UnknownProblem(_) => CliError::Solver(e),
        other => config(other.to_string()),
    })
}

fn hjb_setup(cfg: &RunConfig, p: &HjbProblem) -> Result<(Arc<BasisSpec>, ControlGrid), CliError> {
    let basis = setup(BasisSpec::for_control_set(
        p.state_dim,
        cfg.state_degree,
        &p.control_set,
        cfg.control_degree,
    ))?;
    let grid = setup(p.control_set.grid(cfg.control_grid))?;
    Ok((Arc::new(basis), grid))
}

fn state_basis(cfg: &RunConfig, state_dim: usize) -> Result<Arc<BasisSpec>, CliError> {
    Ok(Arc::new(setup(BasisSpec::state_monomials(
        state_dim,
        cfg.state_degree,
    ))?))
}

pub fn cmd_run(cfg: &RunConfig) -> Result<Report, CliError> {
    let problem = setup(build_problem(&cfg.problem, &cfg.problem_params()))?;
    let options = cfg.solver_options();
    let solution = match &problem {
        Problem::Semilinear(p) => {
            let basis = state_basis(cfg, p.state_dim)?;
            simulate_and_solve_semilinear(p, cfg.n_steps, cfg.n_paths, cfg.seed, &basis, &options)?.1
        }
        Problem::Hjb(p) => {
            let (basis, grid) = hjb_setup(cfg, p)?;
            simulate_and_solve_hjb(p, cfg.n_steps, cfg.n_paths, cfg.seed, &basis, &grid, &options)?.1
        }
    };
    let grid = setup(TimeGrid::uniform(problem.horizon(), cfg.n_steps))?;
    let mut report = Report::new(cfg, &RUN_HEADER);
    report.rows = step_rows(&solution, &grid);
    Ok(report)
}

/// One row per grid time `t_0..t_{n-1}`; the `t_0` row carries `Y_0` and
/// its Monte-Carlo standard error.
fn step_rows(solution: &BackwardSolution, grid: &TimeGrid) -> Vec<Vec<String>> {
    solution
        .steps()
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let (mean, se) = if i == 0 {
                (solution.y0(), solution.y0_se())
            } else {
                (step.y_mean, step.y_se)
            };
            vec![
                i.to_string(),
                float(grid.time(i)),
                float(mean),
                float(se),
                step.effective_rank.to_string(),
                step.fixed_point_iterations.to_string(),
            ]
        })
        .collect()
}

pub fn cmd_converge(cfg: &RunConfig) -> Result<Report, CliError> {
    let problem = setup(build_problem(&cfg.problem, &cfg.problem_params()))?;
    let options = cfg.solver_options();
    let seeds = [cfg.seed];
    let table = match &problem {
        Problem::Semilinear(p) => {
            let study = StudyConfig {
                n_list: cfg.n_list.clone(),
                n_paths: cfg.n_paths,
                seeds: seeds.to_vec(),
                basis: state_basis(cfg, p.state_dim)?,
                options,
                z_substeps: cfg.z_substeps,
            };
            convergence_study(p, &study)?
        }
        Problem::Hjb(p) => {
            let (basis, grid) = hjb_setup(cfg, p)?;
            convergence_study_with(&cfg.n_list, p.horizon, &seeds, |n, seed| {
                let (paths, s) = simulate_and_solve_hjb(p, n, cfg.n_paths, seed, &basis, &grid, &options)?;
                let error = match &p.reference {
                    Some(r) => Some(compute_error_metric(r.as_ref(), &s, &paths, ZQuadrature::LeftEndpoint)?.total),
                    None => None,
                };
                Ok((s.y0(), s.y0_se(), error))
            })?
        }
    };
    let mut report = Report::new(cfg, &CONVERGE_HEADER);
    report.rows = study_rows(&table);
    Ok(report)
}

fn study_rows(table: &StudyTable) -> Vec<Vec<String>> {
    table
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                float(p.modulus),
                float(p.y0),
                float(p.se),
                optional(p.error),
                optional(table.slope),
            ]
        })
        .collect()
}

pub fn cmd_oracle(cfg: &RunConfig) -> Result<Report, CliError> {
    let settings = OracleSettings {
        n: cfg.n_steps,
        n_inner: cfg.n_inner,
        seed: cfg.seed,
    };
    let oracle = oracle_value(&cfg.problem, &cfg.problem_params(), &settings)?;
    let mut report = Report::new(cfg, &ORACLE_HEADER);
    report.rows = vec![vec![
        cfg.problem.clone(),
        oracle.method.to_string(),
        float(oracle.value),
        float(oracle.tolerance),
    ]];
    Ok(report)
}
