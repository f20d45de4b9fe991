//! Numerical laboratory for the discrete-time SIR map with saturated incidence:
//! fixed points and their stability, normal-form coefficients of the flip and
//! Neimark-Sacker bifurcations, orbit diagnostics and positivity regions.

// `!(x <= tol)` is how NaN is rejected throughout; index loops mirror the
// component formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod jet;
pub mod map;
pub mod normal_forms;
pub mod positivity;

pub use error::{Error, Result};
pub use map::{iterate, jacobian, step, FullState, Jacobian2, ModelParams, ParamName, State, UnscaledParams};
