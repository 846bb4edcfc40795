use statrs::distribution::{ContinuousCDF, Normal};

use super::types::LinearDriverSpec;
use crate::error::{invalid, Error, Result};

/// Integration range for a standard normal coordinate; the mass outside is
/// below 1e-32.
const GAUSS_CUTOFF: f64 = 12.0;
const QUADRATURE_TARGET: f64 = 1e-12;
/// Accepted absolute error estimate before a quadrature is reported as failed.
const QUADRATURE_LIMIT: f64 = 1e-8;
const MAX_BISECTIONS: u32 = 24;
const HALTON_POINTS: usize = 1 << 17;
const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Oracle value with its numerical tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub tolerance: f64,
}

fn density(w: f64) -> f64 {
    (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn integrate_line<F: Fn(f64) -> f64>(f: F) -> Result<OracleValue> {
    let g = |w: f64| f(w) * density(w);
    let (integral, error) = adaptive(&g, -GAUSS_CUTOFF, GAUSS_CUTOFF, QUADRATURE_TARGET, 0);
    let scale = integral.abs().max(1.0);
    if !integral.is_finite() || error.is_nan() || error > QUADRATURE_LIMIT * scale {
        return Err(Error::Quadrature {
            residual: error,
            tolerance: QUADRATURE_LIMIT * scale,
        });
    }
    Ok(OracleValue {
        value: integral,
        tolerance: error.max(f64::EPSILON * scale),
    })
}

/// Double-exponential quadrature, bisecting panels whose error estimate
/// misses the target (kinks in payoffs).
fn adaptive<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, target: f64, depth: u32) -> (f64, f64) {
    let out = quadrature::integrate(g, a, b, target);
    if out.error_estimate <= target || depth >= MAX_BISECTIONS {
        return (out.integral, out.error_estimate);
    }
    let mid = 0.5 * (a + b);
    let (l, el) = adaptive(g, a, mid, 0.5 * target, depth + 1);
    let (r, er) = adaptive(g, mid, b, 0.5 * target, depth + 1);
    (l + r, el + er)
}

fn radical_inverse(mut k: usize, base: u32) -> f64 {
    let b = base as f64;
    let (mut inv, mut out) = (1.0 / b, 0.0);
    while k > 0 {
        out += (k % base as usize) as f64 * inv;
        k /= base as usize;
        inv /= b;
    }
    out
}

fn halton_mean<F: Fn(&[f64]) -> f64>(dim: usize, points: usize, f: &F) -> f64 {
    let normal = Normal::standard();
    let mut w = vec![0.0; dim];
    let mut sum = 0.0;
    for k in 1..=points {
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = normal.inverse_cdf(radical_inverse(k, PRIMES[j]));
        }
        sum += f(&w);
    }
    sum / points as f64
}

/// `E[f(W)]` for `W ~ N(0, I_dim)`: nested double-exponential quadrature for
/// `dim ≤ 2`, a Halton sequence mapped through the normal quantile above.
pub fn gaussian_expectation<F: Fn(&[f64]) -> f64>(dim: usize, f: F) -> Result<OracleValue> {
    match dim {
        0 => Err(invalid("gaussian expectation needs a positive dimension")),
        1 => integrate_line(|w| f(&[w])),
        2 => {
            let failure = std::cell::Cell::new(None);
            let outer = integrate_line(|w1| match integrate_line(|w2| f(&[w1, w2])) {
                Ok(inner) => inner.value,
                Err(e) => {
                    failure.set(Some(e));
                    f64::NAN
                }
            });
            if let Some(e) = failure.take() {
                return Err(e);
            }
            outer
        }
        d if d <= PRIMES.len() => {
            let full = halton_mean(d, HALTON_POINTS, &f);
            let half = halton_mean(d, HALTON_POINTS / 2, &f);
            if !full.is_finite() {
                return Err(Error::Quadrature {
                    residual: f64::INFINITY,
                    tolerance: QUADRATURE_LIMIT,
                });
            }
            Ok(OracleValue {
                value: full,
                tolerance: (full - half).abs(),
            })
        }
        d => Err(invalid(format!(
            "gaussian expectation supports up to {} dimensions, got {d}",
            PRIMES.len()
        ))),
    }
}

/// `v(t, x) = E[h(x + W_{T−t})]`, the solution of `∂_t v + ½Δv = 0`,
/// `v(T, ·) = h`.
pub fn heat_reference<H: Fn(&[f64]) -> f64>(t: f64, x: &[f64], h: H, horizon: f64) -> Result<OracleValue> {
    scaled_heat(t, x, h, horizon, 1.0)
}

/// Super-replication price `E[h(x + a_hi W_{T−t})]` of a payoff `h` the
/// caller declares convex, for volatility uncertain in `[a_lo, a_hi]`.
pub fn uncertain_vol_reference<H: Fn(&[f64]) -> f64>(
    h: H,
    x: &[f64],
    t: f64,
    horizon: f64,
    a_hi: f64,
) -> Result<OracleValue> {
    if !(a_hi.is_finite() && a_hi >= 0.0) {
        return Err(invalid(format!("volatility bound must be nonnegative, got {a_hi}")));
    }
    scaled_heat(t, x, h, horizon, a_hi)
}

fn scaled_heat<H: Fn(&[f64]) -> f64>(t: f64, x: &[f64], h: H, horizon: f64, vol: f64) -> Result<OracleValue> {
    if t.is_nan() || t > horizon {
        return Err(invalid(format!("time {t} lies after the horizon {horizon}")));
    }
    let scale = vol * (horizon - t).sqrt();
    if scale == 0.0 {
        return Ok(OracleValue {
            value: h(x),
            tolerance: 0.0,
        });
    }
    gaussian_expectation(x.len(), |w| {
        let y: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| xi + scale * wi).collect();
        h(&y)
    })
}

/// Closed-form `Y_0` of the linear BSDE with driver `δy + α·z + γ`,
/// terminal `h(X_T)` and constant coefficients `dX = b dt + σ dW`
/// (`σ` row-major `d × m`):
/// `e^{δT} E[h(x_0 + (b + σα)T + σW_T)] + γ(e^{δT} − 1)/δ`.
pub fn linear_bsde_reference<H: Fn(&[f64]) -> f64>(
    spec: &LinearDriverSpec,
    h: H,
    x0: &[f64],
    drift: &[f64],
    diffusion: &[f64],
    horizon: f64,
) -> Result<OracleValue> {
    let d = x0.len();
    let m = spec.alpha.len();
    if drift.len() != d || diffusion.len() != d * m || m == 0 {
        return Err(invalid("linear BSDE coefficients have inconsistent dimensions"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let centre: Vec<f64> = (0..d)
        .map(|r| {
            let shift: f64 = (0..m).map(|c| diffusion[r * m + c] * spec.alpha[c]).sum();
            x0[r] + (drift[r] + shift) * horizon
        })
        .collect();
    let root_t = horizon.sqrt();
    let expectation = gaussian_expectation(m, |w| {
        let y: Vec<f64> = (0..d)
            .map(|r| centre[r] + root_t * (0..m).map(|c| diffusion[r * m + c] * w[c]).sum::<f64>())
            .collect();
        h(&y)
    })?;
    let growth = (spec.delta * horizon).exp();
    let running = if spec.delta == 0.0 {
        spec.gamma * horizon
    } else {
        spec.gamma * (spec.delta * horizon).exp_m1() / spec.delta
    };
    Ok(OracleValue {
        value: growth * expectation.value + running,
        tolerance: growth * expectation.tolerance,
    })
}

/// `G(M) = ½ sup_{a ∈ [a_lo, a_hi]} a²M = ½(a_hi² M⁺ − a_lo² M⁻)`.
pub fn g_operator(m: f64, a_lo: f64, a_hi: f64) -> Result<f64> {
    if !(a_lo > 0.0 && a_lo <= a_hi && a_hi.is_finite()) {
        return Err(invalid(format!("need 0 < a_lo <= a_hi, got [{a_lo}, {a_hi}]")));
    }
    Ok(0.5 * (a_hi * a_hi * m.max(0.0) - a_lo * a_lo * (-m).max(0.0)))
}
