use super::fixed_point::FixedPointOptions;
use crate::engine::ControlGrid;
use crate::error::{invalid, Result};
use crate::problems::HjbProblem;
use crate::regression::{argmax_by, ArgmaxOptions, FitFunction};

/// Implicit or explicit backward Euler step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeMode {
    #[default]
    Implicit,
    Explicit,
}

impl std::str::FromStr for SchemeMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "implicit" => Ok(SchemeMode::Implicit),
            "explicit" => Ok(SchemeMode::Explicit),
            other => Err(format!("unknown scheme mode `{other}` (expected implicit or explicit)")),
        }
    }
}

impl std::fmt::Display for SchemeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeMode::Implicit => "implicit",
            SchemeMode::Explicit => "explicit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub mode: SchemeMode,
    pub fixed_point: FixedPointOptions,
    /// Clamp continuation targets to `[−B, B]` before regressing.
    pub truncation: Option<f64>,
    /// Refit the realised `𝒴` values before maximising over the control
    /// instead of reusing the continuation fit.
    pub refit_sup: bool,
    pub argmax: ArgmaxOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mode: SchemeMode::Implicit,
            fixed_point: FixedPointOptions::default(),
            truncation: None,
            refit_sup: false,
            argmax: ArgmaxOptions::default(),
        }
    }
}

impl SolverOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.fixed_point.tol.is_nan() || self.fixed_point.tol <= 0.0 || self.fixed_point.max_iter == 0 {
            return Err(invalid("fixed point needs tol > 0 and max_iter ≥ 1"));
        }
        if let Some(b) = self.truncation {
            if b.is_nan() || b <= 0.0 {
                return Err(invalid(format!("truncation bound must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub(crate) fn clamp(&self, v: f64) -> f64 {
        match self.truncation {
            Some(b) => v.clamp(-b, b),
            None => v,
        }
    }
}

/// Fits and diagnostics of one backward step `t_i`.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Regression of the continuation target (`Y_{i+1}`, or
    /// `Y_{i+1} + fΔt` in explicit mode).
    pub y_fit: FitFunction,
    /// One regression per Brownian coordinate of `Y_{i+1}ΔW/Δt`.
    pub z_fits: Vec<FitFunction>,
    /// Refit of the realised `𝒴` values (HJB scheme with `refit_sup`).
    pub sup_fit: Option<FitFunction>,
    /// Largest number of fixed-point iterations over the paths.
    pub fixed_point_iterations: usize,
    pub effective_rank: usize,
    /// Mean and standard error of the per-path `Y^π_{t_i}`.
    pub y_mean: f64,
    pub y_se: f64,
}

/// Output of a backward pass.
#[derive(Debug, Clone)]
pub struct BackwardSolution {
    pub(crate) mode: SchemeMode,
    pub(crate) n_paths: usize,
    pub(crate) n_steps: usize,
    pub(crate) noise_dim: usize,
    pub(crate) y0: f64,
    pub(crate) y0_se: f64,
    pub(crate) y0_regression: f64,
    pub(crate) steps: Vec<StepRecord>,
    pub(crate) y_paths: Vec<f64>,
    pub(crate) z_paths: Vec<f64>,
    pub(crate) controls: Option<(usize, Vec<f64>)>,
    pub(crate) feedback: Option<Feedback>,
}

#[derive(Debug, Clone)]
pub(crate) struct Feedback {
    pub grid: ControlGrid,
    pub options: SolverOptions,
    pub dt: Vec<f64>,
}

impl BackwardSolution {
    /// Assembles a solution from per-path values, e.g. a reference
    /// evaluated on the paths. `y_paths` is `paths × (n+1)`, `z_paths` is
    /// `paths × n × m`.
    pub fn from_path_values(
        mode: SchemeMode,
        n_paths: usize,
        n_steps: usize,
        noise_dim: usize,
        y_paths: Vec<f64>,
        z_paths: Vec<f64>,
    ) -> Result<Self> {
        if y_paths.len() != n_paths * (n_steps + 1) || z_paths.len() != n_paths * n_steps * noise_dim {
            return Err(invalid("per-path values do not match the batch shape"));
        }
        let y0_values: Vec<f64> = (0..n_paths).map(|p| y_paths[p * (n_steps + 1)]).collect();
        let (y0, y0_se) = super::mean_and_se(&y0_values);
        Ok(Self {
            mode,
            n_paths,
            n_steps,
            noise_dim,
            y0,
            y0_se,
            y0_regression: y0,
            steps: Vec::new(),
            y_paths,
            z_paths,
            controls: None,
            feedback: None,
        })
    }

    pub fn mode(&self) -> SchemeMode {
        self.mode
    }

    /// Point estimate `Y_0`: mean of the per-path values at `t_0`.
    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Monte-Carlo standard error of `Y_0`.
    pub fn y0_se(&self) -> f64 {
        self.y0_se
    }

    /// `Y_0` read off the `t_0` regression at `x_0`.
    pub fn y0_regression(&self) -> f64 {
        self.y0_regression
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Per-step records, indexed by `i = 0..n`.
    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// `Y^π_{t_i}` on `path`.
    pub fn y(&self, path: usize, i: usize) -> f64 {
        self.y_paths[path * (self.n_steps + 1) + i]
    }

    /// `Z^π_{t_i}` on `path`.
    pub fn z(&self, path: usize, i: usize) -> &[f64] {
        let start = (path * self.n_steps + i) * self.noise_dim;
        &self.z_paths[start..start + self.noise_dim]
    }

    /// Maximising control `â_i(X_{t_i})` recorded on `path`.
    pub fn control(&self, path: usize, i: usize) -> Option<&[f64]> {
        self.controls.as_ref().map(|(k, values)| {
            let start = (path * self.n_steps + i) * k;
            &values[start..start + k]
        })
    }

    /// Feedback control `â_i(x)` of an HJB solution, recomputed from the
    /// stored fits.
    pub fn feedback_control(&self, problem: &HjbProblem, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        let Some(fb) = &self.feedback else {
            return Err(invalid("feedback controls exist only for HJB solutions"));
        };
        if i >= self.steps.len() {
            return Err(invalid(format!("step {i} out of range")));
        }
        let step = &self.steps[i];
        let mut failed = None;
        let (a, _) = argmax_by(&fb.grid, fb.options.argmax, |a| {
            match super::hjb::sup_objective(problem, step, &fb.options, fb.dt[i], x, a) {
                Ok(v) => v,
                Err(e) => {
                    failed.get_or_insert(e);
                    f64::NAN
                }
            }
        });
        match failed {
            Some(out) => Err(crate::Error::FixedPoint {
                step: i,
                path: usize::MAX,
                iterations: out.iterations,
                gap: out.gap,
            }),
            None => Ok(a),
        }
    }
}
