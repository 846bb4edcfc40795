use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::solution::BackwardSolution;
use crate::engine::rng::{path_stream, BRIDGE};
use crate::engine::{ForwardModel, PathBatch};
use crate::error::{invalid, Result};
use crate::problems::Reference;

/// Quadrature for `Σ_i E ∫_{t_i}^{t_{i+1}} |Z_t − Z^π_{t_i}|² dt`.
#[derive(Clone, Copy)]
pub enum ZQuadrature<'a> {
    /// `Δt_i · |Z(t_i, X_{t_i}) − Z^π_{t_i}|²`.
    LeftEndpoint,
    /// Left-point rule on `substeps` sub-intervals per step, with the state at
    /// `s ∈ (t_i, t_{i+1})` drawn from the Brownian bridge pinned to the
    /// path's own increment `ΔW_{t_i}` under coefficients frozen at
    /// `X_{t_i}`. Captures the variation of `Z_t` inside each step.
    Bridge {
        model: &'a dyn ForwardModel,
        substeps: usize,
        seed: u64,
    },
}

/// `ℰ(π)` and its pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `ℰ(π)`, with `ℰ(π)² = y_component + z_component`.
    pub total: f64,
    /// `max_i E|v(t_i, X_{t_i}) − Y^π_{t_i}|²`.
    pub y_component: f64,
    /// Time-integrated squared `Z` error; zero without a `Z` reference.
    pub z_component: f64,
    /// `max_i (E[(v − Y^π)_+²])^{1/2}`.
    pub err_plus: f64,
    /// `max_i (E[(v − Y^π)_-²])^{1/2}`.
    pub err_minus: f64,
    /// `E|v − Y^π|²` per grid time.
    pub y_by_step: Vec<f64>,
}

pub fn compute_error_metric(
    reference: &dyn Reference,
    solution: &BackwardSolution,
    paths: &PathBatch,
    quadrature: ZQuadrature<'_>,
) -> Result<ErrorReport> {
    let grid = paths.grid();
    let n = grid.len();
    let n_paths = paths.n_paths();
    let m = solution.noise_dim();
    if solution.n_paths() != n_paths || solution.n_steps() != n {
        return Err(invalid("solution and paths have different shapes"));
    }
    let mut probe = vec![0.0; m];
    let has_z = reference.z(0.0, paths.x0(), &mut probe);
    if let ZQuadrature::Bridge { model, substeps, .. } = quadrature {
        if substeps == 0 {
            return Err(invalid("bridge quadrature needs at least one substep"));
        }
        if model.state_dim() != paths.state_dim() || model.noise_dim() != m {
            return Err(invalid("bridge model does not match the paths"));
        }
    }

    // per path: n+1 signed Y errors, then n integrated Z errors
    let per_path: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut out = Vec::with_capacity(2 * n + 1);
            for i in 0..=n {
                out.push(reference.value(grid.time(i), paths.state(p, i)) - solution.y(p, i));
            }
            if !has_z {
                return out;
            }
            let mut zref = vec![0.0; m];
            match quadrature {
                ZQuadrature::LeftEndpoint => {
                    for i in 0..n {
                        reference.z(grid.time(i), paths.state(p, i), &mut zref);
                        let sq: f64 = zref.iter().zip(solution.z(p, i)).map(|(a, b)| (a - b).powi(2)).sum();
                        out.push(grid.step(i) * sq);
                    }
                }
                ZQuadrature::Bridge { model, substeps, seed } => {
                    let d = paths.state_dim();
                    let mut rng = path_stream(seed, BRIDGE, p);
                    let mut b = vec![0.0; d];
                    let mut sigma = vec![0.0; d * m];
                    let mut w = vec![0.0; m];
                    let mut xs = vec![0.0; d];
                    for i in 0..n {
                        let x = paths.state(p, i);
                        let dw = paths.increment(p, i);
                        let dt = grid.step(i);
                        model.drift(x, &mut b);
                        model.diffusion(x, &mut sigma);
                        let mut acc = 0.0;
                        for j in 0..substeps {
                            let theta = j as f64 / substeps as f64;
                            let spread = (theta * (1.0 - theta) * dt).sqrt();
                            for (wk, dwk) in w.iter_mut().zip(dw) {
                                let xi: f64 = StandardNormal.sample(&mut rng);
                                *wk = theta * dwk + spread * xi;
                            }
                            for k in 0..d {
                                let mut v = x[k] + b[k] * theta * dt;
                                for (l, wl) in w.iter().enumerate() {
                                    v += sigma[k * m + l] * wl;
                                }
                                xs[k] = v;
                            }
                            reference.z(grid.time(i) + theta * dt, &xs, &mut zref);
                            acc += zref
                                .iter()
                                .zip(solution.z(p, i))
                                .map(|(a, b)| (a - b).powi(2))
                                .sum::<f64>();
                        }
                        out.push(dt * acc / substeps as f64);
                    }
                }
            }
            out
        })
        .collect();

    let inv = 1.0 / n_paths as f64;
    let mut y_by_step = vec![0.0; n + 1];
    let mut plus = vec![0.0; n + 1];
    let mut minus = vec![0.0; n + 1];
    let mut z_component = 0.0;
    for row in &per_path {
        for i in 0..=n {
            let e = row[i];
            y_by_step[i] += e * e;
            if e > 0.0 {
                plus[i] += e * e;
            } else {
                minus[i] += e * e;
            }
        }
        z_component += row[n + 1..].iter().sum::<f64>();
    }
    for v in y_by_step.iter_mut().chain(plus.iter_mut()).chain(minus.iter_mut()) {
        *v *= inv;
    }
    z_component *= inv;
    let y_component = y_by_step.iter().copied().fold(0.0, f64::max);
    let err_plus = plus.iter().copied().fold(0.0, f64::max).sqrt();
    let err_minus = minus.iter().copied().fold(0.0, f64::max).sqrt();
    Ok(ErrorReport {
        total: (y_component + z_component).sqrt(),
        y_component,
        z_component,
        err_plus,
        err_minus,
        y_by_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{euler_diffusion, sample_brownian_increments, TimeGrid};
    use crate::problems::{build_problem, Problem, ProblemParams, SemilinearProblem};
    use crate::solver::SchemeMode;

    fn heat_paths(n: usize, n_paths: usize) -> (SemilinearProblem, PathBatch) {
        let Problem::Semilinear(p) = build_problem("heat", &ProblemParams::default()).unwrap() else {
            unreachable!()
        };
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let inc = sample_brownian_increments(&grid, 1, n_paths, 3).unwrap();
        let paths = euler_diffusion(&p, &grid, &inc, &p.x0).unwrap();
        (p, paths)
    }

    fn exact_solution(p: &SemilinearProblem, paths: &PathBatch, shift: f64) -> BackwardSolution {
        let r = p.reference.as_ref().unwrap();
        let n = paths.grid().len();
        let mut ys = Vec::new();
        let mut zs = Vec::new();
        for q in 0..paths.n_paths() {
            for i in 0..=n {
                ys.push(r.value(paths.grid().time(i), paths.state(q, i)) + shift);
            }
            for i in 0..n {
                let mut z = [0.0];
                r.z(paths.grid().time(i), paths.state(q, i), &mut z);
                zs.push(z[0]);
            }
        }
        BackwardSolution::from_path_values(SchemeMode::Implicit, paths.n_paths(), n, 1, ys, zs).unwrap()
    }

    #[test]
    fn exact_solution_has_zero_error() {
        let (p, paths) = heat_paths(6, 200);
        let s = exact_solution(&p, &paths, 0.0);
        let r = compute_error_metric(
            p.reference.as_ref().unwrap().as_ref(),
            &s,
            &paths,
            ZQuadrature::LeftEndpoint,
        )
        .unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!((r.err_plus, r.err_minus), (0.0, 0.0));
    }

    #[test]
    fn constant_shift_is_measured_exactly() {
        let (p, paths) = heat_paths(6, 200);
        let s = exact_solution(&p, &paths, 0.25);
        let r = compute_error_metric(
            p.reference.as_ref().unwrap().as_ref(),
            &s,
            &paths,
            ZQuadrature::LeftEndpoint,
        )
        .unwrap();
        assert!((r.total - 0.25).abs() < 1e-12);
        assert!((r.err_minus - 0.25).abs() < 1e-12);
        assert_eq!(r.err_plus, 0.0);
    }

    #[test]
    fn bridge_quadrature_sees_intra_step_variation() {
        let (p, paths) = heat_paths(4, 4000);
        let s = exact_solution(&p, &paths, 0.0);
        let r = p.reference.as_ref().unwrap().as_ref();
        let bridge = ZQuadrature::Bridge {
            model: &p,
            substeps: 16,
            seed: 1,
        };
        let e = compute_error_metric(r, &s, &paths, bridge).unwrap();
        // E∫|2W_s − 2W_{t_i}|² ds = 2Δt · T, less the 1/substeps quadrature bias
        let expected = 2.0 * 0.25 * (1.0 - 1.0 / 16.0);
        assert!((e.z_component - expected).abs() < 0.05 * expected, "{}", e.z_component);
        assert!(compute_error_metric(
            r,
            &s,
            &paths,
            ZQuadrature::Bridge {
                model: &p,
                substeps: 0,
                seed: 1
            }
        )
        .is_err());
    }
}
