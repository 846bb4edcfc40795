use rayon::prelude::*;

use super::types::HjbProblem;
use crate::engine::{euler_regime_switching, sample_brownian_increments, JumpTrajectory, TimeGrid};
use crate::error::{invalid, Error, Result};

/// Largest number of control sequences the enumeration accepts.
pub const BRUTE_FORCE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceValue {
    pub value: f64,
    pub se: f64,
    /// Control index per time step of the maximizing sequence.
    pub best: Vec<usize>,
    /// `(mean, se)` for every sequence in lexicographic order.
    pub estimates: Vec<(f64, f64)>,
}

/// Best open-loop value `max E[h(X_T) + Σ f(X_i, a_i) Δt]` over all
/// deterministic sequences drawn from `controls` on a uniform `n`-step grid.
/// Every sequence reuses the same Brownian increments, so the estimate of a
/// sequence does not depend on which other sequences are enumerated. The
/// result is a lower bound on the value over adapted controls.
pub fn brute_force_control_value(
    problem: &HjbProblem,
    n: usize,
    controls: &[Vec<f64>],
    n_inner: usize,
    seed: u64,
) -> Result<BruteForceValue> {
    if controls.is_empty() || n == 0 || n_inner == 0 {
        return Err(invalid("brute force needs controls, steps and paths"));
    }
    if controls.iter().any(|a| a.len() != problem.control_dim()) {
        return Err(invalid("control dimension mismatch"));
    }
    let count = (controls.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > BRUTE_FORCE_LIMIT as u128 {
        return Err(Error::Budget {
            count: usize::try_from(count).unwrap_or(usize::MAX),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let count = count as usize;
    let grid = TimeGrid::uniform(problem.horizon, n)?;
    let increments = sample_brownian_increments(&grid, problem.noise_dim, n_inner, seed)?;
    let zero_z = vec![0.0; problem.noise_dim];

    let estimates: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map(|code| {
            let sequence = decode(code, controls.len(), n);
            let marks: Vec<Vec<f64>> = sequence[1..].iter().map(|&j| controls[j].clone()).collect();
            let times = grid.times()[1..n].to_vec();
            let trajectory = JumpTrajectory::new(controls[sequence[0]].clone(), times, marks)?;
            let jumps = vec![trajectory; n_inner];
            let paths = euler_regime_switching(problem, &grid, &increments, &jumps, &problem.x0)?;
            let payoffs: Vec<f64> = (0..n_inner)
                .map(|p| {
                    let running: f64 = (0..n)
                        .map(|i| {
                            (problem.driver)(paths.state(p, i), &controls[sequence[i]], 0.0, &zero_z) * grid.step(i)
                        })
                        .sum();
                    (problem.terminal)(paths.state(p, n)) + running
                })
                .collect();
            Ok(mean_and_se(&payoffs))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (k, e) in estimates.iter().enumerate() {
        if e.0 > estimates[best].0 {
            best = k;
        }
    }
    Ok(BruteForceValue {
        value: estimates[best].0,
        se: estimates[best].1,
        best: decode(best, controls.len(), n),
        estimates,
    })
}

/// Base-`k` digits of `code`, most significant first.
fn decode(mut code: usize, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = code % k;
        code /= k;
    }
    out
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::registry::{build_problem, Problem, ProblemParams};

    fn uncertain_vol() -> HjbProblem {
        match build_problem("uncertain-vol", &ProblemParams::default()).unwrap() {
            Problem::Hjb(p) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn decode_is_lexicographic() {
        assert_eq!(decode(0, 2, 3), vec![0, 0, 0]);
        assert_eq!(decode(1, 2, 3), vec![0, 0, 1]);
        assert_eq!(decode(6, 2, 3), vec![1, 1, 0]);
    }

    #[test]
    fn budget_is_enforced() {
        let p = uncertain_vol();
        let controls: Vec<Vec<f64>> = (0..3).map(|k| vec![0.5 + 0.25 * k as f64]).collect();
        match brute_force_control_value(&p, 4, &controls, 10, 1) {
            Err(Error::Budget { count, limit }) => assert_eq!((count, limit), (81, 64)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn convex_payoff_prefers_the_largest_volatility() {
        let p = uncertain_vol();
        let r = brute_force_control_value(&p, 3, &[vec![0.5], vec![1.0]], 20_000, 5).unwrap();
        assert_eq!(r.best, vec![1, 1, 1]);
        assert!((r.value - 1.0).abs() < 3.0 * r.se, "{} ± {}", r.value, r.se);
        assert_eq!(r.estimates.len(), 8);
    }

    #[test]
    fn singleton_list_is_plain_monte_carlo() {
        let p = uncertain_vol();
        let r = brute_force_control_value(&p, 3, &[vec![1.0]], 20_000, 9).unwrap();
        assert_eq!(r.best, vec![0, 0, 0]);
        assert!((r.value - 1.0).abs() < 3.0 * r.se);
    }
}
