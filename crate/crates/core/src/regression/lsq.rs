use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector, QR};
use rayon::prelude::*;

use super::basis::BasisSpec;
use crate::error::{invalid, Result};

/// Singular values below this fraction of the largest one are discarded.
pub const SVD_RELATIVE_CUTOFF: f64 = 1e-10;

/// Fitted function `Σ_ℓ c_ℓ φ^ℓ(x, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitFunction {
    coefficients: Vec<f64>,
    basis: Arc<BasisSpec>,
    rank: usize,
    truncated: usize,
    warning: Option<String>,
}

impl FitFunction {
    pub fn new(basis: Arc<BasisSpec>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(invalid(format!(
                "{} coefficients for a basis of size {}",
                coefficients.len(),
                basis.len()
            )));
        }
        let rank = basis.len();
        Ok(Self {
            coefficients,
            basis,
            rank,
            truncated: 0,
            warning: None,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    /// Number of singular values kept by the solve.
    pub fn effective_rank(&self) -> usize {
        self.rank
    }

    /// Number of singular values cut by the relative threshold.
    pub fn truncated(&self) -> usize {
        self.truncated
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    /// Inner product with precomputed basis values.
    #[inline]
    pub fn dot(&self, phi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, p) in self.coefficients.iter().zip(phi) {
            acc += c * p;
        }
        acc
    }

    pub fn evaluate(&self, x: &[f64], a: &[f64]) -> f64 {
        self.dot(&self.basis.eval(x, a))
    }
}

/// `Σ_ℓ c_ℓ φ^ℓ(x, a)`
pub fn evaluate_fit(fit: &FitFunction, x: &[f64], a: &[f64]) -> f64 {
    fit.evaluate(x, a)
}

/// Factored regression design: basis values at the samples, reduced by a
/// Householder QR and an SVD of the triangular factor.
///
/// One factorisation serves any number of right-hand sides.
pub struct Design {
    basis: Arc<BasisSpec>,
    rows: usize,
    matrix: Vec<f64>,
    qr: Option<QR<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    u: DMatrix<f64>,
    singular: Vec<f64>,
    v_t: DMatrix<f64>,
    rank: usize,
    truncated: usize,
}

impl Design {
    /// Assembles the design from per-sample `(x_m, a_m)` accessors.
    pub fn from_samples<'a, F>(basis: &Arc<BasisSpec>, rows: usize, sample: F) -> Result<Self>
    where
        F: Fn(usize) -> (&'a [f64], &'a [f64]) + Sync,
    {
        if rows == 0 {
            return Err(invalid("regression needs at least one sample"));
        }
        let cols = basis.len();
        let mut matrix = vec![0.0; rows * cols];
        matrix.par_chunks_mut(cols).enumerate().for_each_init(
            || basis.evaluator(),
            |eval, (m, row)| {
                let (x, a) = sample(m);
                eval.eval(x, a, row);
            },
        );
        Self::from_matrix(basis, rows, matrix)
    }

    /// Design from flat `rows × d` states and `rows × k` controls (`k` may be
    /// zero for a constant control basis).
    pub fn from_flat(basis: &Arc<BasisSpec>, xs: &[f64], controls: &[f64]) -> Result<Self> {
        let d = basis.state_dim();
        if d == 0 || !xs.len().is_multiple_of(d) {
            return Err(invalid("state samples do not match the basis dimension"));
        }
        let rows = xs.len() / d;
        let k = controls.len().checked_div(rows).unwrap_or(0);
        if k * rows != controls.len() {
            return Err(invalid("control samples do not match the number of states"));
        }
        Self::from_samples(basis, rows, |m| {
            (&xs[m * d..(m + 1) * d], &controls[m * k..(m + 1) * k])
        })
    }

    fn from_matrix(basis: &Arc<BasisSpec>, rows: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("design matrix contains non-finite basis values"));
        }
        let cols = basis.len();
        let a = DMatrix::from_row_slice(rows, cols, &matrix);
        let (qr, reduced) = if rows > cols {
            let qr = QR::new(a);
            let r = qr.r();
            (Some(qr), r)
        } else {
            (None, a)
        };
        let (u, singular, v_t) = jacobi_svd(reduced);
        let sigma_max = singular.iter().copied().fold(0.0, f64::max);
        let cutoff = SVD_RELATIVE_CUTOFF * sigma_max;
        let rank = if sigma_max > 0.0 {
            singular.iter().filter(|&&s| s > cutoff).count()
        } else {
            0
        };
        Ok(Self {
            basis: basis.clone(),
            rows,
            matrix,
            qr,
            u,
            singular,
            v_t,
            rank,
            truncated: cols.min(rows) - rank,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    pub fn effective_rank(&self) -> usize {
        self.rank
    }

    /// Basis values of sample `m`.
    pub fn row(&self, m: usize) -> &[f64] {
        let cols = self.basis.len();
        &self.matrix[m * cols..(m + 1) * cols]
    }

    /// Minimal-norm least-squares fit of `targets` on the truncated SVD space.
    pub fn solve(&self, targets: &[f64]) -> Result<FitFunction> {
        if targets.len() != self.rows {
            return Err(invalid(format!("{} targets for {} samples", targets.len(), self.rows)));
        }
        if let Some(m) = targets.iter().position(|t| !t.is_finite()) {
            return Err(invalid(format!("regression target {m} is not finite")));
        }
        let cols = self.basis.len();
        let mut rhs = DVector::from_column_slice(targets);
        let reduced = match &self.qr {
            Some(qr) => {
                qr.q_tr_mul(&mut rhs);
                rhs.rows(0, cols).into_owned()
            }
            None => rhs,
        };
        let mut coefficients = vec![0.0; cols];
        let sigma_max = self.singular.iter().copied().fold(0.0, f64::max);
        if sigma_max > 0.0 {
            let cutoff = SVD_RELATIVE_CUTOFF * sigma_max;
            for (j, &s) in self.singular.iter().enumerate() {
                if s <= cutoff {
                    continue;
                }
                let proj = self.u.column(j).dot(&reduced) / s;
                for (l, c) in coefficients.iter_mut().enumerate() {
                    *c += self.v_t[(j, l)] * proj;
                }
            }
        }
        let warning = if sigma_max == 0.0 {
            let msg = "design matrix is identically zero; returning the zero fit".to_string();
            warn!("{msg}");
            Some(msg)
        } else {
            None
        };
        Ok(FitFunction {
            coefficients,
            basis: self.basis.clone(),
            rank: self.rank,
            truncated: self.truncated,
            warning,
        })
    }

    /// Row-major `(AᵀA)⁺` on the truncated SVD space.
    pub fn gram_pseudo_inverse(&self) -> Vec<f64> {
        let cols = self.basis.len();
        let mut out = vec![0.0; cols * cols];
        let sigma_max = self.singular.iter().copied().fold(0.0, f64::max);
        if sigma_max == 0.0 {
            return out;
        }
        let cutoff = SVD_RELATIVE_CUTOFF * sigma_max;
        for (j, &s) in self.singular.iter().enumerate() {
            if s <= cutoff {
                continue;
            }
            let inv = 1.0 / (s * s);
            for r in 0..cols {
                let vr = self.v_t[(j, r)] * inv;
                for c in 0..cols {
                    out[r * cols + c] += vr * self.v_t[(j, c)];
                }
            }
        }
        out
    }

    /// Fitted values at every sample, summed in basis order.
    pub fn predict(&self, fit: &FitFunction) -> Vec<f64> {
        let cols = self.basis.len();
        self.matrix.par_chunks(cols).map(|row| fit.dot(row)).collect()
    }
}

/// One-sided Jacobi SVD `M = U diag(σ) Vᵀ`, returning `(U, σ, Vᵀ)` with
/// `U` of the shape of `M`. Rotations run until every column pair is
/// orthogonal to working precision, which keeps small singular values
/// accurate on the nearly rank-deficient factors met in regression.
fn jacobi_svd(mut m: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    const MAX_SWEEPS: usize = 80;
    let cols = m.ncols();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = m.column(p).norm_squared();
                let beta = m.column(q).norm_squared();
                let gamma = m.column(p).dot(&m.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for target in [&mut m, &mut v] {
                    for r in 0..target.nrows() {
                        let (xp, xq) = (target[(r, p)], target[(r, q)]);
                        target[(r, p)] = c * xp - s * xq;
                        target[(r, q)] = s * xp + c * xq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut singular = Vec::with_capacity(cols);
    for j in 0..cols {
        let norm = m.column(j).norm();
        singular.push(norm);
        if norm > 0.0 {
            m.column_mut(j).unscale_mut(norm);
        }
    }
    (m, singular, v.transpose())
}

/// One-shot least-squares fit of `targets` on `basis` at the samples
/// `(x_m, a_m)` given flat as `M × d` states and `M × k` controls.
pub fn fit_least_squares(xs: &[f64], controls: &[f64], targets: &[f64], basis: &Arc<BasisSpec>) -> Result<FitFunction> {
    Design::from_flat(basis, xs, controls)?.solve(targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ControlSet;

    fn cubic() -> Arc<BasisSpec> {
        Arc::new(BasisSpec::state_monomials(1, 3).unwrap())
    }

    #[test]
    fn targets_in_span_are_recovered() {
        let basis = Arc::new(BasisSpec::state_monomials(1, 1).unwrap());
        let xs = [0.0, 1.0, 2.0, 3.5, -1.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 3.0 * x).collect();
        let fit = fit_least_squares(&xs, &[], &ys, &basis).unwrap();
        assert!((fit.coefficients()[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients()[1] - 3.0).abs() < 1e-12);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((fit.evaluate(&[*x], &[]) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 2.0).collect();
        let ys = vec![4.25; 50];
        let fit = fit_least_squares(&xs, &[], &ys, &cubic()).unwrap();
        for x in &xs {
            assert!((fit.evaluate(&[*x], &[]) - 4.25).abs() < 1e-10);
        }
    }

    #[test]
    fn evaluate_matches_arithmetic() {
        let basis = Arc::new(BasisSpec::state_monomials(1, 1).unwrap());
        let fit = FitFunction::new(basis.clone(), vec![2.0, 3.0]).unwrap();
        assert_eq!(evaluate_fit(&fit, &[1.0], &[]), 5.0);
        let zero = FitFunction::new(basis, vec![0.0, 0.0]).unwrap();
        assert_eq!(evaluate_fit(&zero, &[123.0], &[]), 0.0);
    }

    #[test]
    fn all_zero_design_gives_zero_fit_with_warning() {
        let set = ControlSet::finite_scalars(&[0.5, 1.0]).unwrap();
        let basis = Arc::new(BasisSpec::for_control_set(1, 2, &set, 0).unwrap());
        // controls outside the indicator set make every basis value zero
        let fit = fit_least_squares(&[1.0, 2.0, 3.0], &[0.7, 0.7, 0.7], &[1.0, 2.0, 3.0], &basis).unwrap();
        assert!(fit.coefficients().iter().all(|&c| c == 0.0));
        assert!(fit.warning().is_some());
        assert_eq!(fit.effective_rank(), 0);
    }

    #[test]
    fn non_finite_targets_are_rejected() {
        let err = fit_least_squares(&[0.0, 1.0], &[], &[1.0, f64::NAN], &cubic()).unwrap_err();
        assert!(matches!(err, crate::Error::InvalidArgument(_)));
    }

    #[test]
    fn duplicated_samples_truncate_rank() {
        let xs = [0.5, 0.5, 0.5, 1.5, 1.5, 1.5];
        let ys = [1.0, 2.0, 3.0, 0.0, 1.0, 2.0];
        let fit = fit_least_squares(&xs, &[], &ys, &cubic()).unwrap();
        assert_eq!(fit.effective_rank(), 2);
        // group means reproduced
        assert!((fit.evaluate(&[0.5], &[]) - 2.0).abs() < 1e-9);
        assert!((fit.evaluate(&[1.5], &[]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wide_design_is_solved() {
        let fit = fit_least_squares(&[0.3, 0.9], &[], &[1.0, 2.0], &cubic()).unwrap();
        assert!((fit.evaluate(&[0.3], &[]) - 1.0).abs() < 1e-9);
        assert!((fit.evaluate(&[0.9], &[]) - 2.0).abs() < 1e-9);
    }
}
