use std::sync::Arc;

use smallvec::{smallvec, SmallVec};

use super::types::{Reference, SemilinearProblem, StateField};
use crate::error::{invalid, Result};

/// Smooth `v(t, x)` with analytic derivatives, used to manufacture a
/// semilinear problem whose exact solution is `v`.
pub trait SmoothTarget: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: f64, x: &[f64]) -> f64;
    fn time_derivative(&self, t: f64, x: &[f64]) -> f64;
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]);
    /// Row-major `d × d` Hessian in `x`.
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]);
}

/// `v(t, x) = e^t sin x` in one dimension.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpSine;

impl SmoothTarget for ExpSine {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        t.exp() * x[0].sin()
    }
    fn time_derivative(&self, t: f64, x: &[f64]) -> f64 {
        t.exp() * x[0].sin()
    }
    fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = t.exp() * x[0].cos();
    }
    fn hessian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out[0] = -t.exp() * x[0].sin();
    }
}

/// Time-homogeneous base dynamics for a manufactured problem.
#[derive(Clone)]
pub struct BaseDynamics {
    pub noise_dim: usize,
    pub drift: StateField,
    /// Row-major `d × m`.
    pub diffusion: StateField,
}

impl BaseDynamics {
    /// `b ≡ 0`, `σ = I`.
    pub fn brownian(dim: usize) -> Self {
        Self {
            noise_dim: dim,
            drift: Arc::new(|_, out: &mut [f64]| out.fill(0.0)),
            diffusion: Arc::new(move |_, out: &mut [f64]| {
                out.fill(0.0);
                for k in 0..dim {
                    out[k * dim + k] = 1.0;
                }
            }),
        }
    }
}

type Scratch = SmallVec<[f64; 16]>;

struct Residual {
    target: Arc<dyn SmoothTarget>,
    base: BaseDynamics,
}

impl Residual {
    /// `(∂_t v + b·∇v + ½ tr(σσᵀ D²v))(t, x)`.
    fn generator(&self, t: f64, x: &[f64]) -> f64 {
        let d = self.target.dim();
        let m = self.base.noise_dim;
        let mut b: Scratch = smallvec![0.0; d];
        let mut s: Scratch = smallvec![0.0; d * m];
        let mut g: Scratch = smallvec![0.0; d];
        let mut hess: Scratch = smallvec![0.0; d * d];
        (self.base.drift)(x, &mut b);
        (self.base.diffusion)(x, &mut s);
        self.target.gradient(t, x, &mut g);
        self.target.hessian(t, x, &mut hess);
        let mut out = self.target.time_derivative(t, x);
        out += b.iter().zip(&g).map(|(b, g)| b * g).sum::<f64>();
        for r in 0..d {
            for c in 0..d {
                let a: f64 = (0..m).map(|k| s[r * m + k] * s[c * m + k]).sum();
                out += 0.5 * a * hess[r * d + c];
            }
        }
        out
    }

    fn z(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let d = self.target.dim();
        let m = self.base.noise_dim;
        let mut s: Scratch = smallvec![0.0; d * m];
        let mut g: Scratch = smallvec![0.0; d];
        (self.base.diffusion)(x, &mut s);
        self.target.gradient(t, x, &mut g);
        for (k, o) in out.iter_mut().enumerate().take(m) {
            *o = (0..d).map(|r| s[r * m + k] * g[r]).sum();
        }
    }
}

/// Exact `(v, σᵀD_x v)` on the augmented state `(x, t)`.
struct ManufacturedReference(Arc<Residual>);

impl Reference for ManufacturedReference {
    fn value(&self, t: f64, state: &[f64]) -> f64 {
        let d = self.0.target.dim();
        self.0.target.value(t, &state[..d])
    }

    fn z(&self, t: f64, state: &[f64], out: &mut [f64]) -> bool {
        let d = self.0.target.dim();
        self.0.z(t, &state[..d], out);
        true
    }
}

/// Builds the semilinear problem solved exactly by `target`: terminal
/// `v(T, ·)` and source `f = −(∂_t v + ℒv)`. Time enters through a last
/// state coordinate with unit drift and no diffusion, so the problem state
/// is `(x, t)` started at `(x0, 0)`.
pub fn manufactured_semilinear(
    name: &str,
    target: Arc<dyn SmoothTarget>,
    base: BaseDynamics,
    horizon: f64,
    x0: &[f64],
) -> Result<SemilinearProblem> {
    let d = target.dim();
    let m = base.noise_dim;
    if x0.len() != d || m == 0 {
        return Err(invalid("manufactured problem dimensions are inconsistent"));
    }
    let residual = Arc::new(Residual { target, base });
    for &t in &[0.0, horizon] {
        let mut g = vec![0.0; d];
        let mut h = vec![0.0; d * d];
        residual.target.gradient(t, x0, &mut g);
        residual.target.hessian(t, x0, &mut h);
        let vals = [
            residual.target.value(t, x0),
            residual.target.time_derivative(t, x0),
            residual.generator(t, x0),
        ];
        if vals.iter().chain(&g).chain(&h).any(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "target of `{name}` has non-finite derivatives at t = {t}"
            )));
        }
    }

    let drift: StateField = {
        let r = residual.clone();
        Arc::new(move |state, out| {
            (r.base.drift)(&state[..d], &mut out[..d]);
            out[d] = 1.0;
        })
    };
    let diffusion: StateField = {
        let r = residual.clone();
        Arc::new(move |state, out| {
            (r.base.diffusion)(&state[..d], &mut out[..d * m]);
            out[d * m..].fill(0.0);
        })
    };
    let source = residual.clone();
    let terminal = residual.clone();
    let mut start = x0.to_vec();
    start.push(0.0);
    let problem = SemilinearProblem {
        name: name.to_string(),
        state_dim: d + 1,
        noise_dim: m,
        drift,
        diffusion,
        driver: Arc::new(move |state, _, _| -source.generator(state[d], &state[..d])),
        terminal: Arc::new(move |state| terminal.target.value(horizon, &state[..d])),
        horizon,
        x0: start,
        lipschitz: 0.0,
        reference: Some(Arc::new(ManufacturedReference(residual))),
    };
    problem.validate()?;
    Ok(problem)
}
