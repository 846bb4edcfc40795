use super::lsq::FitFunction;
use crate::engine::ControlGrid;

/// Options for the control maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxOptions {
    /// Golden-section pass inside the bracketing cell of a box grid.
    pub refine: bool,
    /// Golden-section iterations per coordinate.
    pub refine_iterations: usize,
}

impl Default for ArgmaxOptions {
    fn default() -> Self {
        Self {
            refine: false,
            refine_iterations: 40,
        }
    }
}

/// Maximises `objective` over the grid points.
///
/// Ties go to the lowest grid index and non-finite values never win. With
/// `refine` set on a box grid, one golden-section pass per coordinate runs
/// inside the cell bracketing the best point; the refined point replaces the
/// grid point only if it is strictly better.
pub fn argmax_by<F>(grid: &ControlGrid, options: ArgmaxOptions, mut objective: F) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (j, a) in grid.iter().enumerate() {
        let v = objective(a);
        if v > best_value {
            best = j;
            best_value = v;
        }
    }
    let mut best_point = grid.point(best).to_vec();
    if !options.refine {
        return (best_point, best_value);
    }
    let Some(axes) = grid.axes() else {
        return (best_point, best_value);
    };
    let mut candidate = best_point.clone();
    for (k, axis) in axes.iter().enumerate() {
        if axis.len() < 2 {
            continue;
        }
        let pos = axis
            .iter()
            .position(|&g| g == candidate[k])
            .unwrap_or_else(|| nearest(axis, candidate[k]));
        let lo = axis[pos.saturating_sub(1)];
        let hi = axis[(pos + 1).min(axis.len() - 1)];
        candidate[k] = golden_section(lo, hi, options.refine_iterations, |t| {
            let mut a = candidate.clone();
            a[k] = t;
            objective(&a)
        });
    }
    let refined_value = objective(&candidate);
    if refined_value > best_value {
        best_point = candidate;
        best_value = refined_value;
    }
    (best_point, best_value)
}

fn nearest(axis: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (j, g) in axis.iter().enumerate() {
        if (g - v).abs() < (axis[best] - v).abs() {
            best = j;
        }
    }
    best
}

fn golden_section<F: FnMut(f64) -> f64>(mut lo: f64, mut hi: f64, iterations: usize, mut f: F) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iterations {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// `â(x) = argmax_a φ̂(x, a)` over the control grid, with the maximum.
pub fn argmax_over_control(
    fit: &FitFunction,
    x: &[f64],
    grid: &ControlGrid,
    options: ArgmaxOptions,
) -> (Vec<f64>, f64) {
    let mut eval = fit.basis().evaluator();
    let mut phi = vec![0.0; fit.basis().len()];
    argmax_by(grid, options, |a| {
        eval.eval(x, a, &mut phi);
        fit.dot(&phi)
    })
}
