/// Stopping rule for the implicit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOutcome {
    pub value: f64,
    /// Number of applications of the map `y ↦ target + f(y)Δt`.
    pub iterations: usize,
    /// `|y_k − y_{k−1}|` at exit.
    pub gap: f64,
    pub converged: bool,
}

/// Solves `y = target + f(y)Δt` by Picard iteration from `y_0 = target`,
/// stopping at the first `|y_{k+1} − y_k| ≤ tol`.
///
/// `driver` is `y ↦ f(x, a, y, z)` with everything else frozen.
pub fn implicit_step_fixed_point<F>(target: f64, dt: f64, options: &FixedPointOptions, driver: F) -> FixedPointOutcome
where
    F: Fn(f64) -> f64,
{
    let mut y = target;
    let mut gap = f64::INFINITY;
    for k in 1..=options.max_iter {
        let next = target + driver(y) * dt;
        gap = (next - y).abs();
        y = next;
        if gap <= options.tol {
            return FixedPointOutcome {
                value: y,
                iterations: k,
                gap,
                converged: true,
            };
        }
        if !y.is_finite() {
            break;
        }
    }
    FixedPointOutcome {
        value: y,
        iterations: options.max_iter,
        gap,
        converged: false,
    }
}
