use rand::Rng;

use crate::error::{invalid, Result};

/// Compact control set `A`: an axis-aligned box or a finite list of points.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Finite { points: Vec<Vec<f64>> },
}

impl ControlSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo], vec![hi])
    }

    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(invalid("box control set needs matching non-empty bounds"));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(invalid("box control set bounds must be finite"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(invalid("box control set needs lo <= hi in every coordinate"));
        }
        Ok(ControlSet::Box { lo, hi })
    }

    pub fn finite(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(invalid("finite control set must be non-empty"));
        };
        let dim = first.len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(invalid("finite control set points must share a positive dimension"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("finite control set points must be finite"));
        }
        Ok(ControlSet::Finite { points })
    }

    /// Finite set of scalar controls.
    pub fn finite_scalars(values: &[f64]) -> Result<Self> {
        Self::finite(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSet::Box { lo, .. } => lo.len(),
            ControlSet::Finite { points } => points[0].len(),
        }
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        if a.len() != self.dim() {
            return false;
        }
        match self {
            ControlSet::Box { lo, hi } => a.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *l <= *v && *v <= *h),
            ControlSet::Finite { points } => points.iter().any(|p| p.as_slice() == a),
        }
    }

    /// The unique element when `A` is a singleton.
    pub fn singleton(&self) -> Option<Vec<f64>> {
        match self {
            ControlSet::Box { lo, hi } if lo == hi => Some(lo.clone()),
            ControlSet::Finite { points } => {
                let first = &points[0];
                points.iter().all(|p| p == first).then(|| first.clone())
            }
            _ => None,
        }
    }

    /// Draws from the uniform distribution on `A` into `out`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            ControlSet::Box { lo, hi } => {
                for (k, o) in out.iter_mut().enumerate() {
                    let u: f64 = rng.random();
                    *o = lo[k] + (hi[k] - lo[k]) * u;
                }
            }
            ControlSet::Finite { points } => {
                let j = rng.random_range(0..points.len());
                out.copy_from_slice(&points[j]);
            }
        }
    }

    /// Scan grid over `A`: a tensor grid with `points_per_dim` points per
    /// coordinate for a box, the points themselves for a finite set.
    pub fn grid(&self, points_per_dim: usize) -> Result<ControlGrid> {
        if points_per_dim == 0 {
            return Err(invalid("control grid needs at least one point per dimension"));
        }
        match self {
            ControlSet::Finite { points } => {
                let dim = self.dim();
                Ok(ControlGrid {
                    dim,
                    points: points.iter().flatten().copied().collect(),
                    box_cells: None,
                })
            }
            ControlSet::Box { lo, hi } => {
                let axes: Vec<Vec<f64>> = lo
                    .iter()
                    .zip(hi)
                    .map(|(&l, &h)| {
                        if l == h || points_per_dim == 1 {
                            vec![if l == h { l } else { 0.5 * (l + h) }]
                        } else {
                            let m = points_per_dim - 1;
                            (0..points_per_dim)
                                .map(|j| if j == m { h } else { l + (h - l) * j as f64 / m as f64 })
                                .collect()
                        }
                    })
                    .collect();
                let dim = axes.len();
                let total: usize = axes.iter().map(Vec::len).product();
                let mut points = Vec::with_capacity(total * dim);
                // first coordinate varies slowest
                for flat in 0..total {
                    let mut rem = flat;
                    let mut point = vec![0.0; dim];
                    for k in (0..dim).rev() {
                        point[k] = axes[k][rem % axes[k].len()];
                        rem /= axes[k].len();
                    }
                    points.extend_from_slice(&point);
                }
                Ok(ControlGrid {
                    dim,
                    points,
                    box_cells: Some(axes),
                })
            }
        }
    }
}

/// Finite scan set of control points.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlGrid {
    dim: usize,
    points: Vec<f64>,
    /// Per-axis grid lines when the grid tensorises a box.
    box_cells: Option<Vec<Vec<f64>>>,
}

impl ControlGrid {
    /// Grid from explicit points (no refinement cells).
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let set = ControlSet::finite(points)?;
        set.grid(1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dim)
    }

    pub(crate) fn axes(&self) -> Option<&[Vec<f64>]> {
        self.box_cells.as_deref()
    }

    /// Grid made of the points of `self` followed by the points of `other`
    /// not already present.
    pub fn union(&self, other: &ControlGrid) -> Result<ControlGrid> {
        if self.dim != other.dim {
            return Err(invalid("control grids of different dimension"));
        }
        let mut points: Vec<Vec<f64>> = self.iter().map(<[f64]>::to_vec).collect();
        for p in other.iter() {
            if !points.iter().any(|q| q.as_slice() == p) {
                points.push(p.to_vec());
            }
        }
        ControlGrid::from_points(points)
    }
}
