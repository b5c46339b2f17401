//! n-term approximate solutions over the orthonormal system.
//!
//! With `v = u - s` the homogenized unknown and `psibar_i` the orthonormal
//! basis, the approximation is `u_n = s + sum_i A_i psibar_i`. For an affine
//! right-hand side the coefficients come from one dense linear solve; otherwise
//! from the sequential recursion
//!
//! ```text
//! A_i = sum_{l <= i} beta_il F~(x_l, v_{l-1}(x_l)),   v_m = sum_{j <= m} A_j psibar_j
//! ```
//!
//! optionally repeated as Gauss-Seidel sweeps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::collocation::CollocationBasis;
use crate::error::{Result, RkhsError};
use crate::par::{try_map_indices, Parallelism};
use crate::problem_model::{homogenize, HomogenizedProblem, ProblemSpec};

/// Anything that can be evaluated with derivatives up to order 2.
pub trait TrialFunction: Sync {
    fn value(&self, x: f64, deriv: usize) -> Result<f64>;
}

/// The exact solution of a problem viewed as a trial function.
pub struct ExactTrial<'p>(pub &'p ProblemSpec);

impl TrialFunction for ExactTrial<'_> {
    fn value(&self, x: f64, deriv: usize) -> Result<f64> {
        self.0.exact(x, deriv).ok_or_else(|| {
            RkhsError::Argument(format!("problem `{}` has no exact solution", self.0.name))
        })?
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Nonlinear,
}

/// Bookkeeping from a solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    pub method: Method,
    pub sweeps: usize,
    /// Max change of the nodal values in the last sweep (nonlinear only).
    pub final_change: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RkhsSolution {
    basis: Arc<CollocationBasis>,
    problem: HomogenizedProblem,
    coefficients: Vec<f64>,
    /// `beta^T A`: coefficients over the raw `psi_m`, for fast evaluation.
    raw: Vec<f64>,
    stats: SolveStats,
}

impl RkhsSolution {
    fn new(
        basis: Arc<CollocationBasis>,
        problem: HomogenizedProblem,
        coefficients: Vec<f64>,
        stats: SolveStats,
    ) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|a| !a.is_finite()) {
            return Err(RkhsError::Numeric(format!(
                "coefficient A_{} is not finite",
                i + 1
            )));
        }
        let a = DVector::from_column_slice(&coefficients);
        let raw = (basis.beta().transpose() * a).as_slice().to_vec();
        Ok(Self {
            basis,
            problem,
            coefficients,
            raw,
            stats,
        })
    }

    /// `A_1..A_n`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn basis(&self) -> &Arc<CollocationBasis> {
        &self.basis
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem.base
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    /// `sum A_i^2`, the squared norm of the homogenized part.
    pub fn norm_squared(&self) -> f64 {
        self.coefficients.iter().map(|a| a * a).sum()
    }

    /// Homogenized part only, without range checks.
    fn homogeneous(&self, x: f64, deriv: usize) -> f64 {
        self.raw
            .iter()
            .enumerate()
            .map(|(m, c)| c * self.basis.psi(m, x, deriv))
            .sum()
    }

    /// `u_n` or one of its first two derivatives at `x`.
    pub fn evaluate(&self, x: f64, deriv: usize) -> Result<f64> {
        if deriv > 2 {
            return Err(RkhsError::Argument(format!(
                "derivative order {deriv} is not available (max 2)"
            )));
        }
        self.basis
            .kernel()
            .interval()
            .check(x, "evaluation point")?;
        let v = self.homogeneous(x, deriv);
        Ok(self.problem.unshift(x, v, deriv))
    }

    /// Values `u_n(x_j)` at the collocation points.
    pub fn nodal_values(&self) -> Vec<f64> {
        let a = DVector::from_column_slice(&self.coefficients);
        let v = self.basis.psibar_nodes() * a;
        self.basis
            .points()
            .as_slice()
            .iter()
            .zip(v.iter())
            .map(|(&x, &v)| self.problem.unshift(x, v, 0))
            .collect()
    }
}

impl TrialFunction for RkhsSolution {
    fn value(&self, x: f64, deriv: usize) -> Result<f64> {
        self.evaluate(x, deriv)
    }
}

fn check_compatible(p: &ProblemSpec, basis: &CollocationBasis) -> Result<()> {
    if basis.kernel().interval() != &p.interval {
        return Err(RkhsError::Argument(format!(
            "basis interval {:?} does not match problem interval {:?}",
            basis.kernel().interval(),
            p.interval
        )));
    }
    if basis.k() != p.k {
        return Err(RkhsError::Argument(format!(
            "basis built for k = {} but problem has k = {}",
            basis.k(),
            p.k
        )));
    }
    Ok(())
}

/// Direct solve for `F(x, u) = g(x) + q(x) u`.
///
/// With `M = Psibar beta` (so `M_jl = sum_i psibar_i(x_j) beta_il`), the nodal
/// values of `v` satisfy `(I - M diag(q~)) V = M g~`, after which
/// `A = beta (g~ + q~ V)`.
pub fn solve_linear(p: &ProblemSpec, basis: Arc<CollocationBasis>) -> Result<RkhsSolution> {
    check_compatible(p, &basis)?;
    if !p.is_linear() {
        return Err(RkhsError::Argument(format!(
            "problem `{}` has no affine form; use the nonlinear solver",
            p.name
        )));
    }
    let h = homogenize(p);
    let xs = basis.points().as_slice();
    let n = xs.len();
    let mut g = DVector::<f64>::zeros(n);
    let mut q = DVector::<f64>::zeros(n);
    for (l, &x) in xs.iter().enumerate() {
        let (gl, ql) = h.affine_parts(x).expect("linear problem")?;
        g[l] = gl;
        q[l] = ql;
    }
    let m = basis.psibar_nodes() * basis.beta();
    let mut system = DMatrix::<f64>::identity(n, n);
    for l in 0..n {
        for j in 0..n {
            system[(j, l)] -= m[(j, l)] * q[l];
        }
    }
    let rhs = &m * &g;
    let lu = system.clone().lu();
    let nodal = lu.solve(&rhs).ok_or_else(|| {
        RkhsError::Numeric(format!(
            "collocation system is singular (condition estimate {:e})",
            condition_estimate(&system)
        ))
    })?;
    let forcing = g + q.component_mul(&nodal);
    let a = basis.beta() * forcing;
    RkhsSolution::new(
        basis,
        h,
        a.as_slice().to_vec(),
        SolveStats {
            method: Method::Linear,
            sweeps: 0,
            final_change: None,
        },
    )
}

/// Ratio of largest to smallest singular value.
fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Options for [`solve_nonlinear`].
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearOptions {
    /// Sweep budget; 1 gives the plain forward recursion.
    pub sweeps: usize,
    /// Stop once the max nodal change of a sweep is at most this.
    pub tol: f64,
    /// Coefficients `A` of a previous solution on the same basis to start
    /// from; `None` means `u_0 = s` (zero homogenized part).
    pub initial: Option<Vec<f64>>,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        Self {
            sweeps: 1,
            tol: 1e-12,
            initial: None,
        }
    }
}

/// Sequential coefficient recursion.
///
/// In each sweep `A_i` is computed in order from `F~` evaluated at
/// `x_l, l <= i`, with the iterate at `x_l` taken as the partial sum of the
/// coefficients already updated in this sweep plus the not-yet-updated tail of
/// the previous sweep. The first sweep from a zero start is exactly the
/// one-pass recursion.
pub fn solve_nonlinear(
    p: &ProblemSpec,
    basis: Arc<CollocationBasis>,
    opts: &NonlinearOptions,
) -> Result<RkhsSolution> {
    check_compatible(p, &basis)?;
    if opts.sweeps == 0 {
        return Err(RkhsError::Argument("sweeps must be ≥ 1".into()));
    }
    let n = basis.len();
    let mut old = match &opts.initial {
        Some(a) if a.len() == n => a.clone(),
        Some(a) => {
            return Err(RkhsError::Argument(format!(
                "initial coefficients have length {}, basis has {n}",
                a.len()
            )))
        }
        None => vec![0.0; n],
    };
    let h = homogenize(p);
    let xs = basis.points().as_slice();
    let psibar = basis.psibar_nodes();
    let beta = basis.beta();

    let nodal = |a: &[f64]| -> DVector<f64> { psibar * DVector::from_column_slice(a) };
    let mut prev_nodal = nodal(&old);
    let mut change = f64::INFINITY;
    let mut used = 0;
    let mut fresh = vec![0.0; n];
    let mut forcing = vec![0.0; n];
    for _ in 0..opts.sweeps {
        used += 1;
        for l in 0..n {
            let mut v = 0.0;
            for j in 0..l {
                v += fresh[j] * psibar[(l, j)];
            }
            for j in l..n {
                v += old[j] * psibar[(l, j)];
            }
            forcing[l] = h.rhs(xs[l], v).map_err(|e| match e {
                RkhsError::Domain(msg) => RkhsError::Domain(format!(
                    "at collocation node {} (x = {}): {msg}",
                    l + 1,
                    xs[l]
                )),
                other => other,
            })?;
            let a: f64 = (0..=l).map(|m| beta[(l, m)] * forcing[m]).sum();
            if !a.is_finite() {
                return Err(RkhsError::Numeric(format!(
                    "coefficient A_{} is not finite (x = {})",
                    l + 1,
                    xs[l]
                )));
            }
            fresh[l] = a;
        }
        let new_nodal = nodal(&fresh);
        change = (&new_nodal - &prev_nodal).amax();
        prev_nodal = new_nodal;
        std::mem::swap(&mut old, &mut fresh);
        if change <= opts.tol {
            break;
        }
    }
    RkhsSolution::new(
        basis,
        h,
        old,
        SolveStats {
            method: Method::Nonlinear,
            sweeps: used,
            final_change: Some(change),
        },
    )
}

/// Max of `|u'' + (k/x)u' - F(x, u)|` over `x = a + (i - 1/2)(T - a)/m`,
/// `i = 1..=m`.
pub fn residual_sup_norm(trial: &dyn TrialFunction, p: &ProblemSpec, m: usize) -> Result<f64> {
    residual_sup_norm_with(trial, p, m, Parallelism::default())
}

pub fn residual_sup_norm_with(
    trial: &dyn TrialFunction,
    p: &ProblemSpec,
    m: usize,
    mode: Parallelism,
) -> Result<f64> {
    if m < 2 {
        return Err(RkhsError::Argument("residual grid needs m ≥ 2".into()));
    }
    let a = p.interval.start();
    let h = p.interval.length() / m as f64;
    let residuals = try_map_indices(m, mode, |i| {
        let x = a + (i as f64 + 0.5) * h;
        let u = trial.value(x, 0)?;
        let r = trial.value(x, 2)? + p.singular_term(x, trial.value(x, 1)?)? - p.rhs(x, u)?;
        Ok::<f64, RkhsError>(r.abs())
    })?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub x: f64,
    pub exact: f64,
    pub approximate: f64,
    pub absolute_error: f64,
    /// Absent where the exact value is zero.
    pub relative_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub max_absolute_error: Option<f64>,
    pub max_relative_error: Option<f64>,
}

/// Exact vs approximate values at `points`.
pub fn error_report(
    trial: &dyn TrialFunction,
    p: &ProblemSpec,
    points: &[f64],
) -> Result<ErrorReport> {
    error_report_with(trial, p, points, Parallelism::default())
}

pub fn error_report_with(
    trial: &dyn TrialFunction,
    p: &ProblemSpec,
    points: &[f64],
    mode: Parallelism,
) -> Result<ErrorReport> {
    if !p.has_exact() {
        return Err(RkhsError::Argument(format!(
            "problem `{}` has no exact solution",
            p.name
        )));
    }
    let rows = try_map_indices(points.len(), mode, |i| {
        let x = points[i];
        let exact = p.exact(x, 0).expect("checked above")?;
        let approximate = trial.value(x, 0)?;
        let absolute_error = (exact - approximate).abs();
        let relative_error = (exact != 0.0).then(|| absolute_error / exact.abs());
        Ok::<ErrorRow, RkhsError>(ErrorRow {
            x,
            exact,
            approximate,
            absolute_error,
            relative_error,
        })
    })?;
    let max_absolute_error = rows.iter().map(|r| r.absolute_error).reduce(f64::max);
    let max_relative_error = rows
        .iter()
        .filter_map(|r| r.relative_error)
        .reduce(f64::max);
    Ok(ErrorReport {
        rows,
        max_absolute_error,
        max_relative_error,
    })
}

/// Linear path when the problem is affine, otherwise the recursion with `opts`.
pub fn solve_auto(
    p: &ProblemSpec,
    basis: Arc<CollocationBasis>,
    opts: &NonlinearOptions,
) -> Result<RkhsSolution> {
    if p.is_linear() {
        solve_linear(p, basis)
    } else {
        solve_nonlinear(p, basis, opts)
    }
}
