//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

/// Minimal-norm least-squares solution by a one-sided Jacobi SVD, with
/// singular values at or below `cutoff · σ_max` dropped. `a` is row-major
/// `rows × cols`.
pub fn jacobi_min_norm(a: &[f64], rows: usize, cols: usize, b: &[f64], cutoff: f64) -> Vec<f64> {
    if rows >= cols {
        let (u, s, v) = jacobi_svd(a.to_vec(), rows, cols);
        apply_pinv(&u, &s, &v, rows, cols, b, cutoff)
    } else {
        // A = (Aᵀ)ᵀ = V Σ Uᵀ
        let mut at = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                at[c * rows + r] = a[r * cols + c];
            }
        }
        let (u, s, v) = jacobi_svd(at, cols, rows);
        // x = U Σ⁺ Vᵀ b, with U: cols × rows, V: rows × rows
        let smax = s.iter().copied().fold(0.0, f64::max);
        let mut x = vec![0.0; cols];
        for j in 0..rows {
            if smax == 0.0 || s[j] <= cutoff * smax {
                continue;
            }
            let proj: f64 = (0..rows).map(|r| v[r * rows + j] * b[r]).sum::<f64>() / s[j];
            for (c, xc) in x.iter_mut().enumerate() {
                *xc += u[c * rows + j] * proj;
            }
        }
        x
    }
}

fn apply_pinv(u: &[f64], s: &[f64], v: &[f64], rows: usize, cols: usize, b: &[f64], cutoff: f64) -> Vec<f64> {
    let smax = s.iter().copied().fold(0.0, f64::max);
    let mut x = vec![0.0; cols];
    for j in 0..cols {
        if smax == 0.0 || s[j] <= cutoff * smax {
            continue;
        }
        let proj: f64 = (0..rows).map(|r| u[r * cols + j] * b[r]).sum::<f64>() / s[j];
        for (c, xc) in x.iter_mut().enumerate() {
            *xc += v[c * cols + j] * proj;
        }
    }
    x
}

/// Hestenes one-sided Jacobi: returns `U` (`rows × cols`, orthonormal
/// columns where `σ > 0`), `σ`, and `V` (`cols × cols`), all row-major.
fn jacobi_svd(mut a: Vec<f64>, rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; cols * cols];
    for k in 0..cols {
        v[k * cols + k] = 1.0;
    }
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let (ap, aq) = (a[r * cols + p], a[r * cols + q]);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let (ap, aq) = (a[r * cols + p], a[r * cols + q]);
                    a[r * cols + p] = c * ap - s * aq;
                    a[r * cols + q] = s * ap + c * aq;
                }
                for r in 0..cols {
                    let (vp, vq) = (v[r * cols + p], v[r * cols + q]);
                    v[r * cols + p] = c * vp - s * vq;
                    v[r * cols + q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = vec![0.0; cols];
    for j in 0..cols {
        let norm = (0..rows).map(|r| a[r * cols + j].powi(2)).sum::<f64>().sqrt();
        sigma[j] = norm;
        if norm > 0.0 {
            for r in 0..rows {
                a[r * cols + j] /= norm;
            }
        }
    }
    (a, sigma, v)
}

/// Graded monomials of total degree `≤ degree` in `x`, ordered
/// `1, x_1, …, x_d, x_1², x_1x_2, …`.
pub fn monomials(x: &[f64], degree: usize) -> Vec<f64> {
    let d = x.len();
    let mut out = vec![1.0];
    let mut exps: Vec<Vec<usize>> = vec![vec![0; d]];
    for deg in 1..=degree {
        let mut level = Vec::new();
        gen(d, deg, 0, &mut vec![0; d], &mut level);
        for e in level {
            out.push(e.iter().enumerate().map(|(k, &p)| x[k].powi(p as i32)).product());
            exps.push(e);
        }
    }
    out
}

fn gen(d: usize, remaining: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k == d - 1 {
        cur[k] = remaining;
        out.push(cur.clone());
        cur[k] = 0;
        return;
    }
    for p in (0..=remaining).rev() {
        cur[k] = p;
        gen(d, remaining - p, k + 1, cur, out);
    }
    cur[k] = 0;
}
