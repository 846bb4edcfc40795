use crate::engine::ControlSet;
use crate::error::{invalid, Result};

/// Basis functions on the control variable.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlBasis {
    /// The single function `a ↦ 1`.
    Constant,
    /// Monomials of total degree `≤ degree` in the control coordinates.
    Monomials { dim: usize, degree: usize },
    /// One indicator per point of a finite control set.
    Indicators { points: Vec<Vec<f64>> },
}

/// Tensor-product basis `φ(x)ψ(a)`: state monomials of total degree `≤ p`
/// times a control basis.
///
/// Functions are ordered state-major: index `s * L_ctrl + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    state_dim: usize,
    state_degree: usize,
    state_exponents: Vec<Vec<u32>>,
    control: ControlBasis,
    control_exponents: Vec<Vec<u32>>,
}

/// Exponent tuples of total degree `≤ degree` in `dim` variables, graded by
/// degree then reverse-lexicographic (`x^2` before `xy` before `y^2`).
fn graded_exponents(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    fn rec(dim: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == dim - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            rec(dim, remaining - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree as u32 {
        rec(dim, total, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

impl BasisSpec {
    /// State-only basis (control basis is the constant).
    pub fn state_monomials(state_dim: usize, degree: usize) -> Result<Self> {
        Self::new(state_dim, degree, ControlBasis::Constant)
    }

    pub fn new(state_dim: usize, state_degree: usize, control: ControlBasis) -> Result<Self> {
        if state_dim == 0 {
            return Err(invalid("state dimension must be positive"));
        }
        let control_exponents = match &control {
            ControlBasis::Monomials { dim, degree } => {
                if *dim == 0 {
                    return Err(invalid("control dimension must be positive"));
                }
                graded_exponents(*dim, *degree)
            }
            ControlBasis::Indicators { points } => {
                if points.is_empty() {
                    return Err(invalid("indicator basis needs at least one point"));
                }
                Vec::new()
            }
            ControlBasis::Constant => Vec::new(),
        };
        Ok(Self {
            state_dim,
            state_degree,
            state_exponents: graded_exponents(state_dim, state_degree),
            control,
            control_exponents,
        })
    }

    /// Default basis for a control set: monomials of degree `≤ q` on a box,
    /// indicators on a finite set, the constant when `A` is a singleton.
    pub fn for_control_set(state_dim: usize, p: usize, set: &ControlSet, q: usize) -> Result<Self> {
        let control = if set.singleton().is_some() {
            ControlBasis::Constant
        } else {
            match set {
                ControlSet::Box { lo, .. } => ControlBasis::Monomials {
                    dim: lo.len(),
                    degree: q,
                },
                ControlSet::Finite { points } => ControlBasis::Indicators { points: points.clone() },
            }
        };
        Self::new(state_dim, p, control)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control(&self) -> &ControlBasis {
        &self.control
    }

    pub fn state_len(&self) -> usize {
        self.state_exponents.len()
    }

    pub fn control_len(&self) -> usize {
        match &self.control {
            ControlBasis::Constant => 1,
            ControlBasis::Monomials { .. } => self.control_exponents.len(),
            ControlBasis::Indicators { points } => points.len(),
        }
    }

    /// `L_Φ`
    pub fn len(&self) -> usize {
        self.state_len() * self.control_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn evaluator(&self) -> BasisEval<'_> {
        let ctrl_dim = match &self.control {
            ControlBasis::Monomials { dim, .. } => *dim,
            _ => 0,
        };
        let ctrl_degree = match &self.control {
            ControlBasis::Monomials { degree, .. } => *degree,
            _ => 0,
        };
        BasisEval {
            spec: self,
            state_powers: vec![0.0; self.state_dim * (self.state_degree + 1)],
            control_powers: vec![0.0; ctrl_dim * (ctrl_degree + 1)],
            state_values: vec![0.0; self.state_len()],
            control_values: vec![0.0; self.control_len()],
        }
    }

    /// Allocating convenience wrapper around [`BasisEval::eval`].
    pub fn eval(&self, x: &[f64], a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.evaluator().eval(x, a, &mut out);
        out
    }
}

/// Reusable scratch space for evaluating a basis in hot loops.
pub struct BasisEval<'a> {
    spec: &'a BasisSpec,
    state_powers: Vec<f64>,
    control_powers: Vec<f64>,
    state_values: Vec<f64>,
    control_values: Vec<f64>,
}

fn fill_powers(v: &[f64], degree: usize, table: &mut [f64]) {
    let stride = degree + 1;
    for (k, &xk) in v.iter().enumerate() {
        let row = &mut table[k * stride..(k + 1) * stride];
        row[0] = 1.0;
        for e in 1..stride {
            row[e] = row[e - 1] * xk;
        }
    }
}

fn monomial(exponents: &[u32], table: &[f64], stride: usize) -> f64 {
    let mut value = 1.0;
    for (k, &e) in exponents.iter().enumerate() {
        if e > 0 {
            value *= table[k * stride + e as usize];
        }
    }
    value
}

impl BasisEval<'_> {
    pub fn spec(&self) -> &BasisSpec {
        self.spec
    }

    /// Writes `φ^ℓ(x, a)` for every basis function into `out`.
    pub fn eval(&mut self, x: &[f64], a: &[f64], out: &mut [f64]) {
        let spec = self.spec;
        debug_assert_eq!(x.len(), spec.state_dim);
        debug_assert_eq!(out.len(), spec.len());
        let stride = spec.state_degree + 1;
        fill_powers(x, spec.state_degree, &mut self.state_powers);
        for (v, e) in self.state_values.iter_mut().zip(&spec.state_exponents) {
            *v = monomial(e, &self.state_powers, stride);
        }
        match &spec.control {
            ControlBasis::Constant => self.control_values[0] = 1.0,
            ControlBasis::Monomials { degree, .. } => {
                fill_powers(a, *degree, &mut self.control_powers);
                for (v, e) in self.control_values.iter_mut().zip(&spec.control_exponents) {
                    *v = monomial(e, &self.control_powers, degree + 1);
                }
            }
            ControlBasis::Indicators { points } => {
                for (v, p) in self.control_values.iter_mut().zip(points) {
                    *v = if p.as_slice() == a { 1.0 } else { 0.0 };
                }
            }
        }
        let lc = self.control_values.len();
        for (s, sv) in self.state_values.iter().enumerate() {
            for (c, cv) in self.control_values.iter().enumerate() {
                out[s * lc + c] = sv * cv;
            }
        }
    }
}
