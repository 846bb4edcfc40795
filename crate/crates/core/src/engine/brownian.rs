use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::grid::TimeGrid;
use super::rng::{path_stream, BROWNIAN};
use crate::error::{invalid, Result};

/// Brownian increments `ΔW_{t_i}` for a batch of paths, stored path-major as
/// `paths × steps × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBatch {
    grid: TimeGrid,
    n_paths: usize,
    dim: usize,
    seed: u64,
    data: Vec<f64>,
}

impl IncrementBatch {
    /// Wraps explicit increments, e.g. to replay a recorded batch.
    pub fn from_raw(grid: TimeGrid, dim: usize, n_paths: usize, seed: u64, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || n_paths == 0 {
            return Err(invalid("increment batch needs positive dimension and path count"));
        }
        if data.len() != n_paths * grid.len() * dim {
            return Err(invalid(format!(
                "increment data has {} entries, expected {}",
                data.len(),
                n_paths * grid.len() * dim
            )));
        }
        Ok(Self {
            grid,
            n_paths,
            dim,
            seed,
            data,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.grid.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `ΔW_{t_step}` on `path`.
    pub fn increment(&self, path: usize, step: usize) -> &[f64] {
        let start = (path * self.grid.len() + step) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// All increments of one path, `steps × dim`.
    pub fn path(&self, path: usize) -> &[f64] {
        let len = self.grid.len() * self.dim;
        &self.data[path * len..(path + 1) * len]
    }
}

/// Samples i.i.d. `N(0, Δt_i)` increments for `n_paths` paths of a
/// `dim`-dimensional Brownian motion.
pub fn sample_brownian_increments(grid: &TimeGrid, dim: usize, n_paths: usize, seed: u64) -> Result<IncrementBatch> {
    if dim == 0 {
        return Err(invalid("Brownian dimension must be positive"));
    }
    if n_paths == 0 {
        return Err(invalid("number of paths must be positive"));
    }
    let n = grid.len();
    let sqrt_dt: Vec<f64> = grid.steps().iter().map(|dt| dt.sqrt()).collect();
    let mut data = vec![0.0; n_paths * n * dim];
    data.par_chunks_mut(n * dim).enumerate().for_each(|(p, chunk)| {
        let mut rng = path_stream(seed, BROWNIAN, p);
        for (i, step) in chunk.chunks_mut(dim).enumerate() {
            for w in step.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = sqrt_dt[i] * z;
            }
        }
    });
    Ok(IncrementBatch {
        grid: grid.clone(),
        n_paths,
        dim,
        seed,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn same_seed_is_bitwise_identical() {
        let g = TimeGrid::uniform(1.0, 5).unwrap();
        let a = sample_brownian_increments(&g, 2, 50, 11).unwrap();
        let b = sample_brownian_increments(&g, 2, 50, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_brownian_increments(&g, 2, 50, 12).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn independent_of_worker_count() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sample_brownian_increments(&g, 1, 1000, 3).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn unit_step_mean_is_centered() {
        let n = 100_000;
        let g = TimeGrid::uniform(1.0, 1).unwrap();
        let inc = sample_brownian_increments(&g, 1, n, 1).unwrap();
        let mean = inc.as_slice().iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn half_step_variance() {
        let n = 100_000;
        // Two-sided 1e-6 chi-square interval for the sample variance of
        // N(0, 0.5) draws; it must sit inside the asserted window.
        let chi = ChiSquared::new((n - 1) as f64).unwrap();
        let scale = 0.5 / (n - 1) as f64;
        let (lo, hi) = (scale * chi.inverse_cdf(5e-7), scale * chi.inverse_cdf(1.0 - 5e-7));
        assert!(lo > 0.48 && hi < 0.52, "oracle interval [{lo}, {hi}]");

        let g = TimeGrid::uniform(0.5, 1).unwrap();
        let inc = sample_brownian_increments(&g, 1, n, 2).unwrap();
        let xs = inc.as_slice();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.48..=0.52).contains(&var), "variance {var}");
    }

    #[test]
    fn shape_and_validation() {
        let g = TimeGrid::uniform(1.0, 3).unwrap();
        let inc = sample_brownian_increments(&g, 2, 4, 0).unwrap();
        assert_eq!(inc.as_slice().len(), 4 * 3 * 2);
        assert_eq!(inc.increment(3, 2).len(), 2);
        assert!(sample_brownian_increments(&g, 0, 4, 0).is_err());
        assert!(sample_brownian_increments(&g, 1, 0, 0).is_err());
    }
}
