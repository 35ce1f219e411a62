//! First-crossing functionals of one-dimensional jump-diffusions over a
//! constant barrier.
//!
//! For a process `X(t)` with generator
//! `L f = (1/2) sigma^2(x) f'' + b(x) f' + sum_i theta_i [f(x + eps_i) - f(x)]`
//! starting at `x < S`, this crate computes the distribution and moments of
//!
//! * the first-crossing time `tau = inf { t : X(t) >= S }`,
//! * the first-crossing area `A = integral of X(t) dt over [0, tau]`,
//! * the pre-crossing minimum `m = min X(t) over [0, tau]`,
//!
//! by three mutually cross-checking routes: closed-form expressions
//! ([`closed_form`]), Monte Carlo path simulation ([`mc`]), and
//! finite-difference solution of the associated boundary-value problems
//! with outer conditions ([`solver`]).

// `!(x > 0.0)` guards deliberately send NaN parameters down the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// quadrature/special-function constants keep their full published digits
#![allow(clippy::excessive_precision)]

pub mod closed_form;
pub mod mc;
pub mod process;
pub mod quad;
pub mod solver;
pub mod special;
pub mod tolerances;

pub use closed_form::{CurveLabel, LaplaceCurve, MomentPair};
pub use mc::{CrossingSample, CrossingStats, Field, MCConfig, MomentEstimate};
pub use process::{Barrier, Coefficient, Preset, ProcessSpec};
pub use solver::{BvpSolution, Grid1D, LeftBc, Weight};
