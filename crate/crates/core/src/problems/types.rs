use std::fmt;
use std::sync::Arc;

use crate::engine::{ControlSet, ForwardModel, RegimeSwitchingModel};
use crate::error::{invalid, Result};

/// `b(x)` or `σ(x)` written into an output buffer.
pub type StateField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// `b(x, a)` or `σ(x, a)` written into an output buffer.
pub type ControlledField = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
/// Driver `f(x, y, z)`.
pub type Driver = Arc<dyn Fn(&[f64], f64, &[f64]) -> f64 + Send + Sync>;
/// Driver `f(x, a, y, z)`.
pub type ControlledDriver = Arc<dyn Fn(&[f64], &[f64], f64, &[f64]) -> f64 + Send + Sync>;
/// Terminal condition `h(x)`.
pub type Terminal = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Known solution `v(t, x)` and, optionally, `Z(t, x) = σᵀD_x v(t, x)`.
pub trait Reference: Send + Sync {
    fn value(&self, t: f64, x: &[f64]) -> f64;

    /// Writes `Z(t, x)` into `out` and returns `true`, or returns `false`
    /// when no `Z` reference is available.
    fn z(&self, _t: f64, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// Reference given by closures.
pub struct FnReference<V, Z> {
    value: V,
    z: Option<Z>,
}

impl<V> FnReference<V, fn(f64, &[f64], &mut [f64])>
where
    V: Fn(f64, &[f64]) -> f64 + Send + Sync,
{
    pub fn value_only(value: V) -> Self {
        Self { value, z: None }
    }
}

impl<V, Z> FnReference<V, Z>
where
    V: Fn(f64, &[f64]) -> f64 + Send + Sync,
    Z: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(value: V, z: Z) -> Self {
        Self { value, z: Some(z) }
    }
}

impl<V, Z> Reference for FnReference<V, Z>
where
    V: Fn(f64, &[f64]) -> f64 + Send + Sync,
    Z: Fn(f64, &[f64], &mut [f64]) + Send + Sync,
{
    fn value(&self, t: f64, x: &[f64]) -> f64 {
        (self.value)(t, x)
    }

    fn z(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        match &self.z {
            Some(z) => {
                z(t, x, out);
                true
            }
            None => false,
        }
    }
}

/// Markovian BSDE `Y_t = h(X_T) + ∫ f(X, Y, Z) ds − ∫ Z dW` with forward
/// diffusion `dX = b(X) dt + σ(X) dW`, i.e. the semilinear PDE
/// `∂_t v + ℒv + f(x, v, σᵀD_x v) = 0`, `v(T, ·) = h`.
#[derive(Clone)]
pub struct SemilinearProblem {
    pub name: String,
    pub state_dim: usize,
    pub noise_dim: usize,
    pub drift: StateField,
    pub diffusion: StateField,
    pub driver: Driver,
    pub terminal: Terminal,
    pub horizon: f64,
    pub x0: Vec<f64>,
    /// Declared Lipschitz constant of `f` in `(y, z)`.
    pub lipschitz: f64,
    pub reference: Option<Arc<dyn Reference>>,
}

impl fmt::Debug for SemilinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearProblem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("noise_dim", &self.noise_dim)
            .field("horizon", &self.horizon)
            .field("x0", &self.x0)
            .field("lipschitz", &self.lipschitz)
            .field("has_reference", &self.reference.is_some())
            .finish()
    }
}

impl SemilinearProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.state_dim == 0 || self.noise_dim == 0 {
            return Err(invalid("state and noise dimensions must be positive"));
        }
        if self.x0.len() != self.state_dim {
            return Err(invalid("x0 does not match the state dimension"));
        }
        let mut b = vec![0.0; self.state_dim];
        let mut s = vec![0.0; self.state_dim * self.noise_dim];
        (self.drift)(&self.x0, &mut b);
        (self.diffusion)(&self.x0, &mut s);
        let z = vec![0.0; self.noise_dim];
        let f = (self.driver)(&self.x0, 0.0, &z);
        let h = (self.terminal)(&self.x0);
        if b.iter().chain(&s).chain([&f, &h]).any(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "problem `{}` has non-finite coefficients at x0",
                self.name
            )));
        }
        Ok(())
    }
}

impl ForwardModel for SemilinearProblem {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    fn drift(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out)
    }
    fn diffusion(&self, x: &[f64], out: &mut [f64]) {
        (self.diffusion)(x, out)
    }
}

/// Stochastic control problem
/// `v(t, x) = sup_α E[h(X_T) + ∫ f(X_s, α_s, ·) ds]` with
/// `dX = b(X, α) dt + σ(X, α) dW`, `α ∈ A`, solved through its randomized
/// regime-switching representation with intensity mass `λ̄`.
#[derive(Clone)]
pub struct HjbProblem {
    pub name: String,
    pub state_dim: usize,
    pub noise_dim: usize,
    pub control_set: ControlSet,
    pub drift: ControlledField,
    pub diffusion: ControlledField,
    pub driver: ControlledDriver,
    pub terminal: Terminal,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub lipschitz: f64,
    /// Total mass `λ̄` of the (uniform) intensity measure.
    pub intensity: f64,
    pub reference: Option<Arc<dyn Reference>>,
}

impl fmt::Debug for HjbProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HjbProblem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("noise_dim", &self.noise_dim)
            .field("control_set", &self.control_set)
            .field("horizon", &self.horizon)
            .field("x0", &self.x0)
            .field("intensity", &self.intensity)
            .field("has_reference", &self.reference.is_some())
            .finish()
    }
}

impl HjbProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity.is_finite() && self.intensity > 0.0) {
            return Err(invalid(format!(
                "intensity mass must be positive, got {}",
                self.intensity
            )));
        }
        let a = match &self.control_set {
            crate::engine::ControlSet::Box { lo, .. } => lo.clone(),
            crate::engine::ControlSet::Finite { points } => points[0].clone(),
        };
        self.frozen(&a).validate()
    }

    pub fn control_dim(&self) -> usize {
        self.control_set.dim()
    }

    /// The semilinear problem obtained by holding the control at `a`.
    pub fn frozen(&self, a: &[f64]) -> SemilinearProblem {
        let a: Arc<[f64]> = a.into();
        let (drift, diffusion, driver) = (self.drift.clone(), self.diffusion.clone(), self.driver.clone());
        let (a1, a2, a3) = (a.clone(), a.clone(), a);
        SemilinearProblem {
            name: format!("{}-frozen", self.name),
            state_dim: self.state_dim,
            noise_dim: self.noise_dim,
            drift: Arc::new(move |x, out| drift(x, &a1, out)),
            diffusion: Arc::new(move |x, out| diffusion(x, &a2, out)),
            driver: Arc::new(move |x, y, z| driver(x, &a3, y, z)),
            terminal: self.terminal.clone(),
            horizon: self.horizon,
            x0: self.x0.clone(),
            lipschitz: self.lipschitz,
            reference: None,
        }
    }
}

impl RegimeSwitchingModel for HjbProblem {
    fn state_dim(&self) -> usize {
        self.state_dim
    }
    fn noise_dim(&self) -> usize {
        self.noise_dim
    }
    fn control_dim(&self) -> usize {
        self.control_set.dim()
    }
    fn drift(&self, x: &[f64], a: &[f64], out: &mut [f64]) {
        (self.drift)(x, a, out)
    }
    fn diffusion(&self, x: &[f64], a: &[f64], out: &mut [f64]) {
        (self.diffusion)(x, a, out)
    }
}

/// Constant linear driver `f(y, z) = δy + α·z + γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDriverSpec {
    pub delta: f64,
    pub alpha: Vec<f64>,
    pub gamma: f64,
}

impl LinearDriverSpec {
    pub fn new(delta: f64, alpha: Vec<f64>, gamma: f64) -> Result<Self> {
        if !delta.is_finite() || !gamma.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
            return Err(invalid("linear driver coefficients must be finite"));
        }
        Ok(Self { delta, alpha, gamma })
    }

    pub fn eval(&self, y: f64, z: &[f64]) -> f64 {
        let az: f64 = self.alpha.iter().zip(z).map(|(a, z)| a * z).sum();
        self.delta * y + az + self.gamma
    }

    pub fn lipschitz(&self) -> f64 {
        self.delta.abs() + self.alpha.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}
