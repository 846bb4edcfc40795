use rayon::prelude::*;

use super::brownian::IncrementBatch;
use super::grid::TimeGrid;
use super::poisson::JumpTrajectory;
use crate::error::{invalid, Error, Result};

/// Time-homogeneous diffusion `dX = b(X) dt + σ(X) dW`.
///
/// `σ` is written row-major as a `state_dim × noise_dim` matrix.
pub trait ForwardModel: Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn drift(&self, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, x: &[f64], out: &mut [f64]);
}

/// Regime-switching diffusion `dX = b(X, I) dt + σ(X, I) dW`.
pub trait RegimeSwitchingModel: Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn drift(&self, x: &[f64], a: &[f64], out: &mut [f64]);
    fn diffusion(&self, x: &[f64], a: &[f64], out: &mut [f64]);
}

/// Simulated Euler trajectories, stored path-major as `paths × (n+1) × d`,
/// with the regime `I_{t_i}` per grid time when the paths switch regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    grid: TimeGrid,
    n_paths: usize,
    state_dim: usize,
    x0: Vec<f64>,
    states: Vec<f64>,
    regimes: Option<(usize, Vec<f64>)>,
    increments: IncrementBatch,
}

impl PathBatch {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// `X^π_{t_step}` on `path`.
    pub fn state(&self, path: usize, step: usize) -> &[f64] {
        let start = (path * (self.grid.len() + 1) + step) * self.state_dim;
        &self.states[start..start + self.state_dim]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// The Brownian increments that drove the batch.
    pub fn increments(&self) -> &IncrementBatch {
        &self.increments
    }

    /// `ΔW_{t_step}` on `path`.
    pub fn increment(&self, path: usize, step: usize) -> &[f64] {
        self.increments.increment(path, step)
    }

    pub fn noise_dim(&self) -> usize {
        self.increments.dim()
    }

    pub fn control_dim(&self) -> Option<usize> {
        self.regimes.as_ref().map(|(k, _)| *k)
    }

    /// `I_{t_step}` on `path`, for regime-switching batches.
    pub fn regime(&self, path: usize, step: usize) -> Option<&[f64]> {
        self.regimes.as_ref().map(|(k, values)| {
            let start = (path * (self.grid.len() + 1) + step) * k;
            &values[start..start + k]
        })
    }
}

#[inline]
fn euler_step(x: &[f64], b: &[f64], sigma: &[f64], dw: &[f64], dt: f64, out: &mut [f64]) {
    let m = dw.len();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = x[k] + b[k] * dt;
        for j in 0..m {
            acc += sigma[k * m + j] * dw[j];
        }
        *o = acc;
    }
}

fn check_shapes(grid: &TimeGrid, increments: &IncrementBatch, noise_dim: usize, x0: &[f64], d: usize) -> Result<()> {
    if increments.grid() != grid {
        return Err(invalid("increments were sampled on a different time grid"));
    }
    if increments.dim() != noise_dim {
        return Err(invalid(format!(
            "increments have dimension {}, model expects {noise_dim}",
            increments.dim()
        )));
    }
    if x0.len() != d {
        return Err(invalid(format!(
            "x0 has length {}, model state dimension is {d}",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("x0 must be finite"));
    }
    Ok(())
}

fn first_error(results: Vec<Result<()>>) -> Result<()> {
    results.into_iter().find(|r| r.is_err()).unwrap_or(Ok(()))
}

/// Euler scheme `X_{i+1} = X_i + b(X_i)Δt_i + σ(X_i)ΔW_i` started at `x0`.
pub fn euler_diffusion<M: ForwardModel + ?Sized>(
    model: &M,
    grid: &TimeGrid,
    increments: &IncrementBatch,
    x0: &[f64],
) -> Result<PathBatch> {
    let d = model.state_dim();
    let m = model.noise_dim();
    check_shapes(grid, increments, m, x0, d)?;
    let n = grid.len();
    let n_paths = increments.n_paths();
    let mut states = vec![0.0; n_paths * (n + 1) * d];
    let results: Vec<Result<()>> = states
        .par_chunks_mut((n + 1) * d)
        .enumerate()
        .map(|(p, path)| {
            path[..d].copy_from_slice(x0);
            let mut b = vec![0.0; d];
            let mut sigma = vec![0.0; d * m];
            for i in 0..n {
                let (done, rest) = path.split_at_mut((i + 1) * d);
                let x = &done[i * d..];
                model.drift(x, &mut b);
                model.diffusion(x, &mut sigma);
                euler_step(x, &b, &sigma, increments.increment(p, i), grid.step(i), &mut rest[..d]);
                if rest[..d].iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        path: p,
                        step: i + 1,
                        what: "forward state",
                    });
                }
            }
            Ok(())
        })
        .collect();
    first_error(results)?;
    Ok(PathBatch {
        grid: grid.clone(),
        n_paths,
        state_dim: d,
        x0: x0.to_vec(),
        states,
        regimes: None,
        increments: increments.clone(),
    })
}

/// Euler scheme of the regime-switching diffusion, with coefficients frozen at
/// the left-endpoint regime `I_{t_i}` over `[t_i, t_{i+1})`.
pub fn euler_regime_switching<M: RegimeSwitchingModel + ?Sized>(
    model: &M,
    grid: &TimeGrid,
    increments: &IncrementBatch,
    jumps: &[JumpTrajectory],
    x0: &[f64],
) -> Result<PathBatch> {
    let d = model.state_dim();
    let m = model.noise_dim();
    let k = model.control_dim();
    check_shapes(grid, increments, m, x0, d)?;
    let n_paths = increments.n_paths();
    if jumps.len() != n_paths {
        return Err(invalid(format!(
            "{} jump trajectories for {n_paths} Brownian paths",
            jumps.len()
        )));
    }
    if jumps.iter().any(|j| j.dim() != k) {
        return Err(invalid("jump marks do not match the model control dimension"));
    }
    let n = grid.len();
    let mut states = vec![0.0; n_paths * (n + 1) * d];
    let mut regimes = vec![0.0; n_paths * (n + 1) * k];
    let results: Vec<Result<()>> = states
        .par_chunks_mut((n + 1) * d)
        .zip(regimes.par_chunks_mut((n + 1) * k))
        .enumerate()
        .map(|(p, (path, regime))| {
            for i in 0..=n {
                regime[i * k..(i + 1) * k].copy_from_slice(jumps[p].regime_at(grid.time(i)));
            }
            path[..d].copy_from_slice(x0);
            let mut b = vec![0.0; d];
            let mut sigma = vec![0.0; d * m];
            for i in 0..n {
                let (done, rest) = path.split_at_mut((i + 1) * d);
                let x = &done[i * d..];
                let a = &regime[i * k..(i + 1) * k];
                model.drift(x, a, &mut b);
                model.diffusion(x, a, &mut sigma);
                euler_step(x, &b, &sigma, increments.increment(p, i), grid.step(i), &mut rest[..d]);
                if rest[..d].iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        path: p,
                        step: i + 1,
                        what: "forward state",
                    });
                }
            }
            Ok(())
        })
        .collect();
    first_error(results)?;
    Ok(PathBatch {
        grid: grid.clone(),
        n_paths,
        state_dim: d,
        x0: x0.to_vec(),
        states,
        regimes: Some((k, regimes)),
        increments: increments.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{sample_brownian_increments, simulate_marked_poisson, ControlSet, IntensityMeasure};

    struct Scalar<B, S>(B, S);

    impl<B: Fn(f64) -> f64 + Sync, S: Fn(f64) -> f64 + Sync> ForwardModel for Scalar<B, S> {
        fn state_dim(&self) -> usize {
            1
        }
        fn noise_dim(&self) -> usize {
            1
        }
        fn drift(&self, x: &[f64], out: &mut [f64]) {
            out[0] = (self.0)(x[0]);
        }
        fn diffusion(&self, x: &[f64], out: &mut [f64]) {
            out[0] = (self.1)(x[0]);
        }
    }

    struct ScalarRegime<B, S>(B, S);

    impl<B: Fn(f64, f64) -> f64 + Sync, S: Fn(f64, f64) -> f64 + Sync> RegimeSwitchingModel for ScalarRegime<B, S> {
        fn state_dim(&self) -> usize {
            1
        }
        fn noise_dim(&self) -> usize {
            1
        }
        fn control_dim(&self) -> usize {
            1
        }
        fn drift(&self, x: &[f64], a: &[f64], out: &mut [f64]) {
            out[0] = (self.0)(x[0], a[0]);
        }
        fn diffusion(&self, x: &[f64], a: &[f64], out: &mut [f64]) {
            out[0] = (self.1)(x[0], a[0]);
        }
    }

    #[test]
    fn zero_dynamics_stay_put() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        let inc = sample_brownian_increments(&g, 1, 100, 1).unwrap();
        let paths = euler_diffusion(&Scalar(|_| 0.0, |_| 0.0), &g, &inc, &[0.7]).unwrap();
        assert!(paths.states().iter().all(|&x| x == 0.7));
    }

    #[test]
    fn unit_drift_is_exact() {
        for n in [1, 2, 4, 8] {
            let g = TimeGrid::uniform(1.0, n).unwrap();
            let inc = sample_brownian_increments(&g, 1, 3, 1).unwrap();
            let paths = euler_diffusion(&Scalar(|_| 1.0, |_| 0.0), &g, &inc, &[0.0]).unwrap();
            for p in 0..3 {
                assert_eq!(paths.state(p, n)[0], 1.0);
            }
        }
    }

    #[test]
    fn brownian_second_moment() {
        let n_paths = 100_000;
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        let inc = sample_brownian_increments(&g, 1, n_paths, 17).unwrap();
        let paths = euler_diffusion(&Scalar(|_| 0.0, |_| 1.0), &g, &inc, &[0.0]).unwrap();
        let m2 = (0..n_paths).map(|p| paths.state(p, 10)[0].powi(2)).sum::<f64>() / n_paths as f64;
        // W_T^2 ~ chi2(1): sd of the mean is sqrt(2/N) ≈ 0.0045; ±0.03 is ~6.7 sd.
        assert!((0.97..=1.03).contains(&m2), "E[X_T^2] = {m2}");
    }

    #[test]
    fn martingale_mean_for_zero_drift() {
        let n_paths = 100_000;
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let inc = sample_brownian_increments(&g, 1, n_paths, 23).unwrap();
        let model = Scalar(|_| 0.0, |x: f64| 0.5 + 0.3 * x.sin());
        let paths = euler_diffusion(&model, &g, &inc, &[1.0]).unwrap();
        let incs: Vec<f64> = (0..n_paths).map(|p| paths.state(p, 16)[0] - 1.0).collect();
        let mean = incs.iter().sum::<f64>() / n_paths as f64;
        let sd = (incs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_paths - 1) as f64).sqrt();
        assert!(mean.abs() <= 4.0 * sd / (n_paths as f64).sqrt(), "mean {mean}, sd {sd}");
    }

    #[test]
    fn deterministic_ode_converges_first_order() {
        // dX = X dt, X_0 = 1: Euler endpoint (1 + 1/n)^n -> e with error ~ e/(2n).
        let errors: Vec<f64> = [10, 20, 40, 80]
            .iter()
            .map(|&n| {
                let g = TimeGrid::uniform(1.0, n).unwrap();
                let inc = sample_brownian_increments(&g, 1, 1, 0).unwrap();
                let paths = euler_diffusion(&Scalar(|x| x, |_| 0.0), &g, &inc, &[1.0]).unwrap();
                (paths.state(0, n)[0] - std::f64::consts::E).abs()
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.8..2.2).contains(&ratio), "error ratio {ratio}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let g = TimeGrid::uniform(1.0, 50).unwrap();
        let inc = sample_brownian_increments(&g, 1, 2, 0).unwrap();
        let err = euler_diffusion(&Scalar(|x| x * x * 1e300, |_| 0.0), &g, &inc, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { path: 0, .. }));
    }

    #[test]
    fn singleton_regime_matches_plain_euler() {
        let g = TimeGrid::uniform(1.0, 12).unwrap();
        let inc = sample_brownian_increments(&g, 1, 400, 8).unwrap();
        let set = ControlSet::finite_scalars(&[0.8]).unwrap();
        let mu = IntensityMeasure::uniform(set, 2.0).unwrap();
        let jumps = simulate_marked_poisson(&mu, 1.0, 400, 8).unwrap();
        let regime = ScalarRegime(|x: f64, a: f64| -a * x, |x: f64, a: f64| a * (1.0 + 0.1 * x.cos()));
        let plain = Scalar(|x: f64| -0.8 * x, |x: f64| 0.8 * (1.0 + 0.1 * x.cos()));
        let switched = euler_regime_switching(&regime, &g, &inc, &jumps, &[0.3]).unwrap();
        let frozen = euler_diffusion(&plain, &g, &inc, &[0.3]).unwrap();
        assert_eq!(switched.states(), frozen.states());
        assert!((0..400).all(|p| switched.regime(p, 5) == Some(&[0.8][..])));
    }

    #[test]
    fn injected_jump_switches_drift_at_midpoint() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        let inc = sample_brownian_increments(&g, 1, 1, 0).unwrap();
        let jumps = vec![JumpTrajectory::new(vec![0.0], vec![0.5], vec![vec![1.0]]).unwrap()];
        let model = ScalarRegime(|_, a: f64| a, |_, _| 0.0);
        let paths = euler_regime_switching(&model, &g, &inc, &jumps, &[2.0]).unwrap();
        assert_eq!(paths.state(0, 8)[0], 2.5);
        assert_eq!(paths.regime(0, 3), Some(&[0.0][..]));
        assert_eq!(paths.regime(0, 4), Some(&[1.0][..]));
    }

    #[test]
    fn regime_paths_independent_of_workers() {
        let g = TimeGrid::uniform(1.0, 6).unwrap();
        let set = ControlSet::interval(0.5, 1.0).unwrap();
        let mu = IntensityMeasure::uniform(set, 2.0).unwrap();
        let model = ScalarRegime(|_, _| 0.0, |_, a: f64| a);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let inc = sample_brownian_increments(&g, 1, 300, 2).unwrap();
                    let jumps = simulate_marked_poisson(&mu, 1.0, 300, 2).unwrap();
                    euler_regime_switching(&model, &g, &inc, &jumps, &[0.0]).unwrap()
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let other = TimeGrid::uniform(1.0, 5).unwrap();
        let inc = sample_brownian_increments(&other, 1, 2, 0).unwrap();
        assert!(euler_diffusion(&Scalar(|_| 0.0, |_| 1.0), &g, &inc, &[0.0]).is_err());
        let inc = sample_brownian_increments(&g, 2, 2, 0).unwrap();
        assert!(euler_diffusion(&Scalar(|_| 0.0, |_| 1.0), &g, &inc, &[0.0]).is_err());
    }
}
