//! Empirical least-squares regression on bases over `(x, a)` and grid
//! maximisation of fitted functions over the control variable.

mod argmax;
mod basis;
mod lsq;

pub use argmax::{argmax_by, argmax_over_control, ArgmaxOptions};
pub use basis::{BasisEval, BasisSpec, ControlBasis};
pub use lsq::{evaluate_fit, fit_least_squares, Design, FitFunction, SVD_RELATIVE_CUTOFF};
