use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::control::ControlSet;
use super::rng::{path_stream, JUMPS};
use crate::error::{invalid, Result};

/// How the regime `I_0` is chosen before the first jump.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialRegime {
    /// One extra draw from the normalised mark distribution.
    Sampled,
    Fixed(Vec<f64>),
}

/// Finite intensity measure `λ(da)` on the control set: total mass `λ̄`
/// times the uniform distribution on `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMeasure {
    set: ControlSet,
    total_mass: f64,
    initial: InitialRegime,
}

impl IntensityMeasure {
    pub fn uniform(set: ControlSet, total_mass: f64) -> Result<Self> {
        if !(total_mass.is_finite() && total_mass > 0.0) {
            return Err(invalid(format!(
                "intensity total mass must be positive and finite, got {total_mass}"
            )));
        }
        Ok(Self {
            set,
            total_mass,
            initial: InitialRegime::Sampled,
        })
    }

    pub fn with_initial(mut self, initial: InitialRegime) -> Result<Self> {
        if let InitialRegime::Fixed(a) = &initial {
            if !self.set.contains(a) {
                return Err(invalid("fixed initial regime must lie in the control set"));
            }
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn set(&self) -> &ControlSet {
        &self.set
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn initial(&self) -> &InitialRegime {
        &self.initial
    }
}

/// One path of the pure-jump regime process `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrajectory {
    dim: usize,
    initial: Vec<f64>,
    times: Vec<f64>,
    marks: Vec<f64>,
}

impl JumpTrajectory {
    /// Builds a trajectory from explicit jump times and marks (one mark per
    /// time, each of length `initial.len()`).
    pub fn new(initial: Vec<f64>, times: Vec<f64>, marks: Vec<Vec<f64>>) -> Result<Self> {
        let dim = initial.len();
        if dim == 0 {
            return Err(invalid("regime dimension must be positive"));
        }
        if times.len() != marks.len() || marks.iter().any(|m| m.len() != dim) {
            return Err(invalid("one mark of the regime dimension per jump time"));
        }
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("jump times must be positive"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("jump times must be strictly increasing"));
        }
        Ok(Self {
            dim,
            initial,
            times,
            marks: marks.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn jump_count(&self) -> usize {
        self.times.len()
    }

    pub fn mark(&self, k: usize) -> &[f64] {
        &self.marks[k * self.dim..(k + 1) * self.dim]
    }

    /// Right-continuous regime value `I_t`.
    pub fn regime_at(&self, t: f64) -> &[f64] {
        let k = self.times.partition_point(|&tk| tk <= t);
        if k == 0 {
            &self.initial
        } else {
            self.mark(k - 1)
        }
    }
}

/// Simulates `n_paths` trajectories of the marked Poisson process on
/// `(0, horizon]`: exponential inter-arrival times of rate `λ̄` and i.i.d.
/// marks from `λ̄⁻¹λ(da)`.
pub fn simulate_marked_poisson(
    intensity: &IntensityMeasure,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<JumpTrajectory>> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if n_paths == 0 {
        return Err(invalid("number of paths must be positive"));
    }
    let exp = Exp::new(intensity.total_mass).map_err(|e| invalid(format!("exponential law: {e}")))?;
    let dim = intensity.set.dim();
    let trajectories = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_stream(seed, JUMPS, p);
            let mut initial = vec![0.0; dim];
            match &intensity.initial {
                InitialRegime::Sampled => intensity.set.sample_uniform(&mut rng, &mut initial),
                InitialRegime::Fixed(a) => initial.copy_from_slice(a),
            }
            let mut times = Vec::new();
            let mut marks = Vec::new();
            let mut t = 0.0;
            let mut mark = vec![0.0; dim];
            loop {
                t += exp.sample(&mut rng);
                if t > horizon {
                    break;
                }
                intensity.set.sample_uniform(&mut rng, &mut mark);
                times.push(t);
                marks.extend_from_slice(&mark);
            }
            JumpTrajectory {
                dim,
                initial,
                times,
                marks,
            }
        })
        .collect();
    Ok(trajectories)
}
