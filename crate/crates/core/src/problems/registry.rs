use std::sync::Arc;

use super::brute_force::brute_force_control_value;
use super::manufactured::{manufactured_semilinear, BaseDynamics, ExpSine};
use super::oracles::{heat_reference, linear_bsde_reference, uncertain_vol_reference, OracleValue};
use super::types::{FnReference, HjbProblem, LinearDriverSpec, Reference, SemilinearProblem};
use crate::engine::ControlSet;
use crate::error::{invalid, Error, Result};

pub const PROBLEM_NAMES: [&str; 5] = ["heat", "linear-bsde", "manufactured-sine", "uncertain-vol", "hjb-tiny"];

/// Overrides applied when building a registered problem. `None` keeps the
/// problem's own default.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub delta: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Constant terminal value of `linear-bsde`.
    pub h_const: f64,
    pub x0: Option<f64>,
    pub horizon: Option<f64>,
    /// Intensity mass `λ̄` of the HJB problems.
    pub lambda: Option<f64>,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            alpha: 0.0,
            gamma: 1.0,
            h_const: 0.0,
            x0: None,
            horizon: None,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Problem {
    Semilinear(SemilinearProblem),
    Hjb(HjbProblem),
}

impl Problem {
    pub fn name(&self) -> &str {
        match self {
            Problem::Semilinear(p) => &p.name,
            Problem::Hjb(p) => &p.name,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Problem::Semilinear(p) => p.horizon,
            Problem::Hjb(p) => p.horizon,
        }
    }

    pub fn x0(&self) -> &[f64] {
        match self {
            Problem::Semilinear(p) => &p.x0,
            Problem::Hjb(p) => &p.x0,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Problem::Semilinear(p) => p.state_dim,
            Problem::Hjb(p) => p.state_dim,
        }
    }

    pub fn reference(&self) -> Option<&Arc<dyn Reference>> {
        match self {
            Problem::Semilinear(p) => p.reference.as_ref(),
            Problem::Hjb(p) => p.reference.as_ref(),
        }
    }
}

/// Settings for the Monte-Carlo oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub n: usize,
    pub n_inner: usize,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            n: 3,
            n_inner: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub method: &'static str,
    pub value: f64,
    /// Quadrature tolerance, or the standard error of a Monte-Carlo oracle.
    pub tolerance: f64,
}

fn square(x: &[f64]) -> f64 {
    x[0] * x[0]
}

fn scalar_sde(drift: f64, vol: f64) -> (super::types::StateField, super::types::StateField) {
    (
        Arc::new(move |_, out: &mut [f64]| out[0] = drift),
        Arc::new(move |_, out: &mut [f64]| out[0] = vol),
    )
}

fn horizon(params: &ProblemParams) -> Result<f64> {
    let t = params.horizon.unwrap_or(1.0);
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {t}")));
    }
    Ok(t)
}

fn heat(params: &ProblemParams) -> Result<SemilinearProblem> {
    let t_end = horizon(params)?;
    let (drift, diffusion) = scalar_sde(0.0, 1.0);
    let reference = FnReference::new(
        move |t, x: &[f64]| x[0] * x[0] + (t_end - t),
        |_, x: &[f64], out: &mut [f64]| out[0] = 2.0 * x[0],
    );
    Ok(SemilinearProblem {
        name: "heat".into(),
        state_dim: 1,
        noise_dim: 1,
        drift,
        diffusion,
        driver: Arc::new(|_, _, _| 0.0),
        terminal: Arc::new(square),
        horizon: t_end,
        x0: vec![params.x0.unwrap_or(0.0)],
        lipschitz: 0.0,
        reference: Some(Arc::new(reference)),
    })
}

fn linear_bsde(params: &ProblemParams) -> Result<SemilinearProblem> {
    let t_end = horizon(params)?;
    let spec = LinearDriverSpec::new(params.delta, vec![params.alpha], params.gamma)?;
    let h = params.h_const;
    if !h.is_finite() {
        return Err(invalid("terminal constant must be finite"));
    }
    let (drift, diffusion) = scalar_sde(0.0, 1.0);
    let (delta, gamma) = (spec.delta, spec.gamma);
    let reference = FnReference::new(
        move |t, _: &[f64]| {
            let tau = t_end - t;
            let running = if delta == 0.0 {
                gamma * tau
            } else {
                gamma * (delta * tau).exp_m1() / delta
            };
            (delta * tau).exp() * h + running
        },
        |_, _: &[f64], out: &mut [f64]| out[0] = 0.0,
    );
    let lipschitz = spec.lipschitz();
    Ok(SemilinearProblem {
        name: "linear-bsde".into(),
        state_dim: 1,
        noise_dim: 1,
        drift,
        diffusion,
        driver: Arc::new(move |_, y, z| spec.eval(y, z)),
        terminal: Arc::new(move |_| h),
        horizon: t_end,
        x0: vec![params.x0.unwrap_or(0.0)],
        lipschitz,
        reference: Some(Arc::new(reference)),
    })
}

fn uncertain_vol(params: &ProblemParams) -> Result<HjbProblem> {
    let t_end = horizon(params)?;
    let a_hi = 1.0;
    Ok(HjbProblem {
        name: "uncertain-vol".into(),
        state_dim: 1,
        noise_dim: 1,
        control_set: ControlSet::interval(0.5, a_hi)?,
        drift: Arc::new(|_, _, out: &mut [f64]| out[0] = 0.0),
        diffusion: Arc::new(|_, a: &[f64], out: &mut [f64]| out[0] = a[0]),
        driver: Arc::new(|_, _, _, _| 0.0),
        terminal: Arc::new(square),
        horizon: t_end,
        x0: vec![params.x0.unwrap_or(0.0)],
        lipschitz: 0.0,
        intensity: params.lambda.unwrap_or(2.0),
        reference: Some(Arc::new(FnReference::value_only(move |t, x: &[f64]| {
            x[0] * x[0] + a_hi * a_hi * (t_end - t)
        }))),
    })
}

/// Running reward of `hjb-tiny`: increasing in `a` for every `x`, so the
/// constant control at the top of `A` is optimal.
pub fn hjb_tiny_reward(x: &[f64], a: &[f64]) -> f64 {
    a[0] * (1.0 + x[0].clamp(-0.5, 0.5))
}

fn hjb_tiny(params: &ProblemParams) -> Result<HjbProblem> {
    let t_end = horizon(params)?;
    Ok(HjbProblem {
        name: "hjb-tiny".into(),
        state_dim: 1,
        noise_dim: 1,
        control_set: ControlSet::finite_scalars(&[0.5, 1.0])?,
        drift: Arc::new(|_, _, out: &mut [f64]| out[0] = 0.0),
        diffusion: Arc::new(|_, a: &[f64], out: &mut [f64]| out[0] = a[0]),
        driver: Arc::new(|x, a, _, _| hjb_tiny_reward(x, a)),
        terminal: Arc::new(square),
        horizon: t_end,
        x0: vec![params.x0.unwrap_or(0.0)],
        lipschitz: 0.0,
        intensity: params.lambda.unwrap_or(2.0),
        reference: None,
    })
}

/// Builds a registered problem by name.
pub fn build_problem(name: &str, params: &ProblemParams) -> Result<Problem> {
    let problem = match name {
        "heat" => Problem::Semilinear(heat(params)?),
        "linear-bsde" => Problem::Semilinear(linear_bsde(params)?),
        "manufactured-sine" => Problem::Semilinear(manufactured_semilinear(
            "manufactured-sine",
            Arc::new(ExpSine),
            BaseDynamics::brownian(1),
            horizon(params)?,
            &[params.x0.unwrap_or(0.5)],
        )?),
        "uncertain-vol" => Problem::Hjb(uncertain_vol(params)?),
        "hjb-tiny" => Problem::Hjb(hjb_tiny(params)?),
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    match &problem {
        Problem::Semilinear(p) => p.validate()?,
        Problem::Hjb(p) => p.validate()?,
    }
    Ok(problem)
}

/// Independent value of `v(0, x0)` for a registered problem.
pub fn oracle_value(name: &str, params: &ProblemParams, settings: &OracleSettings) -> Result<OracleReport> {
    let problem = build_problem(name, params)?;
    let t_end = problem.horizon();
    let x0 = problem.x0().to_vec();
    let quadrature = |method, v: OracleValue| OracleReport {
        method,
        value: v.value,
        tolerance: v.tolerance,
    };
    match (name, &problem) {
        ("heat", _) => Ok(quadrature("heat-quadrature", heat_reference(0.0, &x0, square, t_end)?)),
        ("linear-bsde", _) => {
            let spec = LinearDriverSpec::new(params.delta, vec![params.alpha], params.gamma)?;
            let h = params.h_const;
            let v = linear_bsde_reference(&spec, |_| h, &x0, &[0.0], &[1.0], t_end)?;
            Ok(quadrature("linear-closed-form", v))
        }
        ("manufactured-sine", Problem::Semilinear(p)) => {
            let reference = p.reference.as_ref().expect("manufactured problems carry a reference");
            Ok(OracleReport {
                method: "exact",
                value: reference.value(0.0, &x0),
                tolerance: 0.0,
            })
        }
        ("uncertain-vol", _) => Ok(quadrature(
            "uncertain-vol-quadrature",
            uncertain_vol_reference(square, &x0, 0.0, t_end, 1.0)?,
        )),
        ("hjb-tiny", Problem::Hjb(p)) => {
            let controls: Vec<Vec<f64>> = p.control_set.grid(1)?.iter().map(|a| a.to_vec()).collect();
            let r = brute_force_control_value(p, settings.n, &controls, settings.n_inner, settings.seed)?;
            Ok(OracleReport {
                method: "brute-force",
                value: r.value,
                tolerance: r.se,
            })
        }
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_builds() {
        for name in PROBLEM_NAMES {
            let p = build_problem(name, &ProblemParams::default()).unwrap();
            assert_eq!(p.name(), name);
        }
    }

    #[test]
    fn unknown_name_is_reported() {
        match build_problem("nope", &ProblemParams::default()) {
            Err(Error::UnknownProblem(n)) => assert_eq!(n, "nope"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oracle_examples() {
        let heat = oracle_value("heat", &ProblemParams::default(), &OracleSettings::default()).unwrap();
        assert!((heat.value - 1.0).abs() < 1e-10);
        let params = ProblemParams {
            delta: 0.0,
            gamma: 1.0,
            ..ProblemParams::default()
        };
        let lin = oracle_value("linear-bsde", &params, &OracleSettings::default()).unwrap();
        assert!((lin.value - 1.0).abs() < 1e-12);
        let sine = oracle_value(
            "manufactured-sine",
            &ProblemParams::default(),
            &OracleSettings::default(),
        )
        .unwrap();
        assert_eq!(sine.value, 0.5f64.sin());
        let uv = oracle_value("uncertain-vol", &ProblemParams::default(), &OracleSettings::default()).unwrap();
        assert!((uv.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hjb_tiny_oracle_is_near_two() {
        let settings = OracleSettings {
            n: 3,
            n_inner: 20_000,
            seed: 3,
        };
        let r = oracle_value("hjb-tiny", &ProblemParams::default(), &settings).unwrap();
        assert_eq!(r.method, "brute-force");
        assert!((r.value - 2.0).abs() < 4.0 * r.tolerance + 0.01, "{r:?}");
    }

    #[test]
    fn references_match_closed_forms() {
        let p = build_problem(
            "linear-bsde",
            &ProblemParams {
                h_const: 1.0,
                gamma: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        let v = p.reference().unwrap().value(0.0, &[0.0]);
        assert!((v - std::f64::consts::E).abs() < 1e-12);
    }
}
