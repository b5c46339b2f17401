//! Reproducing kernel collocation for Lane-Emden type singular initial value
//! problems
//!
//! ```text
//! u''(x) + (k/x) u'(x) = F(x, u),   a < x <= T,
//! u(a) = alpha,  u'(a) = beta.
//! ```
//!
//! The unknown is shifted to zero initial data and sought in the space
//! `W(3,2)[a,T]` of functions with square-integrable third derivative and
//! `u(a) = u'(a) = 0`. Its reproducing kernel is a symmetric piecewise quintic
//! ([`kernel_space::W23Kernel`]). Operator images of kernel sections at a set of
//! collocation points are orthonormalized ([`collocation::CollocationBasis`]) and
//! the solution is expanded over that system, either in one linear solve for
//! affine right-hand sides or through the sequential coefficient recursion for
//! nonlinear ones ([`rkhs_solver`]).
//!
//! [`reference_oracle`] is an independent Runge-Kutta integrator used to check
//! the collocation results on problems without closed-form solutions.
//!
//! The `parallel` feature (on by default) runs matrix assembly and grid
//! evaluation on rayon. Without it every [`Parallelism`] request runs
//! sequentially.

// `!(v > 0.0)` style tests are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collocation;
pub mod error;
pub mod kernel_space;
mod par;
pub mod problem_model;
pub mod quadrature;
pub mod reference_oracle;
pub mod rhs_expr;
pub mod rkhs_solver;

pub use collocation::{uniform_points, CollocationBasis, PointSet};
pub use error::{Result, RkhsError};
pub use kernel_space::{Interval, W21Kernel, W23Kernel};
pub use par::Parallelism;
pub use problem_model::{builtin_example, builtin_examples, homogenize, ProblemSpec};
pub use rkhs_solver::{
    error_report, residual_sup_norm, solve_linear, solve_nonlinear, ErrorReport, NonlinearOptions,
    RkhsSolution, TrialFunction,
};

/// The six-point grid of the standard result tables.
pub const TABLE_GRID: [f64; 6] = [0.16, 0.32, 0.48, 0.64, 0.80, 0.96];
