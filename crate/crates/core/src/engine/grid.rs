use crate::error::{invalid, Result};

/// Partition `0 = t_0 < t_1 < ... < t_n = T` of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    steps: Vec<f64>,
    modulus: f64,
}

impl TimeGrid {
    /// Uniform grid with `n` steps of size `horizon / n`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(invalid("number of time steps must be at least 1"));
        }
        let mut times: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        times[n] = horizon;
        Self::from_times(times)
    }

    /// Arbitrary strictly increasing grid starting at zero.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(invalid("a time grid needs at least two points"));
        }
        if times[0] != 0.0 {
            return Err(invalid(format!("time grid must start at 0, got {}", times[0])));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("time grid contains non-finite values"));
        }
        let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        if steps.iter().any(|&dt| dt <= 0.0) {
            return Err(invalid("time grid must be strictly increasing"));
        }
        let modulus = steps.iter().copied().fold(0.0, f64::max);
        Ok(Self { times, steps, modulus })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// `t_i`
    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    /// `t_{i+1} - t_i`
    pub fn step(&self, i: usize) -> f64 {
        self.steps[i]
    }

    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Largest step `|π|`.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }
}
