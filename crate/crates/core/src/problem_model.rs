//! Lane-Emden problem instances
//!
//! ```text
//! u'' + (k/x) u' = F(x, u),  a < x <= T,  u(a) = alpha,  u'(a) = beta
//! ```
//!
//! plus the shift to zero initial data and the three built-in examples.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Result, RkhsError};
use crate::kernel_space::Interval;

/// Right-hand side `F(x, u)`.
pub type RhsFn = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;
/// A function of `x` alone.
pub type ScalarFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;
/// Exact solution: `(x, derivative order 0..=2) -> value`.
pub type ExactFn = Arc<dyn Fn(f64, usize) -> Result<f64> + Send + Sync>;

/// `F(x, u) = g(x) + q(x) u`.
#[derive(Clone)]
pub struct AffineRhs {
    pub g: ScalarFn,
    pub q: ScalarFn,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub k: f64,
    pub interval: Interval,
    pub alpha: f64,
    pub beta: f64,
    rhs: RhsFn,
    rhs_du: Option<RhsFn>,
    affine: Option<AffineRhs>,
    exact: Option<ExactFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("interval", &self.interval)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("linear", &self.affine.is_some())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        k: f64,
        interval: Interval,
        alpha: f64,
        beta: f64,
        rhs: RhsFn,
    ) -> Result<Self> {
        if !k.is_finite() || !alpha.is_finite() || !beta.is_finite() {
            return Err(RkhsError::Argument(
                "k, alpha and beta must be finite".into(),
            ));
        }
        // k/x must be finite on (a, T].
        if k != 0.0 && interval.start() < 0.0 && interval.end() >= 0.0 {
            return Err(RkhsError::Singularity(format!(
                "x = 0 lies inside ({}, {}] and k = {k} is nonzero",
                interval.start(),
                interval.end()
            )));
        }
        Ok(Self {
            name: name.into(),
            k,
            interval,
            alpha,
            beta,
            rhs,
            rhs_du: None,
            affine: None,
            exact: None,
        })
    }

    /// Marks the problem as linear with `F = g + q u`. The caller guarantees
    /// this agrees with the general right-hand side.
    pub fn with_affine(mut self, g: ScalarFn, q: ScalarFn) -> Self {
        self.affine = Some(AffineRhs { g, q });
        self
    }

    pub fn with_exact(mut self, exact: ExactFn) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_rhs_du(mut self, du: RhsFn) -> Self {
        self.rhs_du = Some(du);
        self
    }

    pub fn rhs(&self, x: f64, u: f64) -> Result<f64> {
        (self.rhs)(x, u)
    }

    pub fn rhs_du(&self, x: f64, u: f64) -> Option<Result<f64>> {
        self.rhs_du.as_ref().map(|f| f(x, u))
    }

    pub fn affine(&self) -> Option<&AffineRhs> {
        self.affine.as_ref()
    }

    pub fn is_linear(&self) -> bool {
        self.affine.is_some()
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Exact solution or its first two derivatives, when known.
    pub fn exact(&self, x: f64, deriv: usize) -> Option<Result<f64>> {
        self.exact.as_ref().map(|f| f(x, deriv))
    }

    /// `(k/x) * w`, with the `w == 0` case returning 0 even at `x = 0`.
    pub fn singular_term(&self, x: f64, w: f64) -> Result<f64> {
        if w == 0.0 || self.k == 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Err(RkhsError::Singularity(format!(
                "(k/x) * {w} is unbounded at x = 0"
            )));
        }
        Ok(self.k / x * w)
    }
}

/// The problem for `v = u - s`, `s(x) = alpha + beta (x - a)`:
///
/// ```text
/// v'' + (k/x) v' = F(x, v + s(x)) - (k/x) beta,   v(a) = v'(a) = 0.
/// ```
#[derive(Clone, Debug)]
pub struct HomogenizedProblem {
    pub base: ProblemSpec,
}

pub fn homogenize(p: &ProblemSpec) -> HomogenizedProblem {
    HomogenizedProblem { base: p.clone() }
}

impl HomogenizedProblem {
    /// Derivative `deriv` of the shift `s`.
    pub fn shift(&self, x: f64, deriv: usize) -> f64 {
        let p = &self.base;
        match deriv {
            0 => p.alpha + p.beta * (x - p.interval.start()),
            1 => p.beta,
            _ => 0.0,
        }
    }

    /// `F~(x, v)`.
    pub fn rhs(&self, x: f64, v: f64) -> Result<f64> {
        let p = &self.base;
        Ok(p.rhs(x, v + self.shift(x, 0))? - p.singular_term(x, p.beta)?)
    }

    /// Affine parts `(g~(x), q~(x))` of `F~`, when the base problem is linear.
    pub fn affine_parts(&self, x: f64) -> Option<Result<(f64, f64)>> {
        let p = &self.base;
        p.affine().map(|aff| {
            let g = (aff.g)(x)?;
            let q = (aff.q)(x)?;
            let g_shifted = g + q * self.shift(x, 0) - p.singular_term(x, p.beta)?;
            Ok((g_shifted, q))
        })
    }

    /// `v + s` and its derivatives, given those of `v`.
    pub fn unshift(&self, x: f64, v: f64, deriv: usize) -> f64 {
        v + self.shift(x, deriv)
    }
}

/// Maximum ODE residual and initial-condition mismatch of a problem's exact
/// solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactCheck {
    pub max_residual: f64,
    pub ic_mismatch: f64,
}

/// Residual of the exact solution at `x_i = a + i (T - a)/10`, `i = 1..=10`.
pub fn verify_exact(p: &ProblemSpec) -> Result<ExactCheck> {
    let exact = p.exact.as_ref().ok_or_else(|| {
        RkhsError::Argument(format!("problem `{}` has no exact solution", p.name))
    })?;
    let a = p.interval.start();
    let ic_mismatch = (exact(a, 0)? - p.alpha)
        .abs()
        .max((exact(a, 1)? - p.beta).abs());
    let mut max_residual: f64 = 0.0;
    for i in 1..=10 {
        let x = a + i as f64 * p.interval.length() / 10.0;
        let u = exact(x, 0)?;
        let r = exact(x, 2)? + p.singular_term(x, exact(x, 1)?)? - p.rhs(x, u)?;
        max_residual = max_residual.max(r.abs());
    }
    Ok(ExactCheck {
        max_residual,
        ic_mismatch,
    })
}

/// Names accepted by [`builtin_example`].
pub const BUILTIN_NAMES: [&str; 3] = ["ex1", "ex2", "ex3"];

/// `u'' + (2/x)u' + u = x^3 + x^2 + 12x + 6` on `[0,1]`, `u = x^3 + x^2`.
pub fn example1() -> ProblemSpec {
    let g = |x: f64| x.powi(3) + x * x + 12.0 * x + 6.0;
    ProblemSpec::new(
        "ex1",
        2.0,
        Interval::unit(),
        0.0,
        0.0,
        Arc::new(move |x, u| Ok(g(x) - u)),
    )
    .expect("valid builtin")
    .with_affine(Arc::new(move |x| Ok(g(x))), Arc::new(|_| Ok(-1.0)))
    .with_rhs_du(Arc::new(|_, _| Ok(-1.0)))
    .with_exact(Arc::new(|x, d| {
        Ok(match d {
            0 => x.powi(3) + x * x,
            1 => 3.0 * x * x + 2.0 * x,
            2 => 6.0 * x + 2.0,
            _ => return Err(RkhsError::Argument("exact derivative order > 2".into())),
        })
    }))
}

/// `u'' + (2/x)u' + 4(2e^u + e^(u/2)) = 0` on `[0,1]`, `u = -2 ln(1 + x^2)`.
pub fn example2() -> ProblemSpec {
    ProblemSpec::new(
        "ex2",
        2.0,
        Interval::unit(),
        0.0,
        0.0,
        Arc::new(|_, u: f64| Ok(-4.0 * (2.0 * u.exp() + (0.5 * u).exp()))),
    )
    .expect("valid builtin")
    .with_rhs_du(Arc::new(|_, u: f64| {
        Ok(-4.0 * (2.0 * u.exp() + 0.5 * (0.5 * u).exp()))
    }))
    .with_exact(Arc::new(|x, d| {
        let w = 1.0 + x * x;
        Ok(match d {
            0 => -2.0 * w.ln(),
            1 => -4.0 * x / w,
            2 => -4.0 * (1.0 - x * x) / (w * w),
            _ => return Err(RkhsError::Argument("exact derivative order > 2".into())),
        })
    }))
}

fn log_term(u: f64) -> Result<f64> {
    if u <= 0.0 {
        return Err(RkhsError::Domain(format!("ln(u) needs u > 0, got u = {u}")));
    }
    Ok(u.ln())
}

/// `u'' + (8/x)u' + 9 pi u + 2 pi u ln u = 0` on `[0,1]`, `u(0) = 1`,
/// `u = exp(-pi x^2 / 2)`.
pub fn example3() -> ProblemSpec {
    ProblemSpec::new(
        "ex3",
        8.0,
        Interval::unit(),
        1.0,
        0.0,
        Arc::new(|_, u: f64| Ok(-9.0 * PI * u - 2.0 * PI * u * log_term(u)?)),
    )
    .expect("valid builtin")
    .with_rhs_du(Arc::new(|_, u: f64| {
        Ok(-11.0 * PI - 2.0 * PI * log_term(u)?)
    }))
    .with_exact(Arc::new(|x, d| {
        let u = (-0.5 * PI * x * x).exp();
        Ok(match d {
            0 => u,
            1 => -PI * x * u,
            2 => (PI * PI * x * x - PI) * u,
            _ => return Err(RkhsError::Argument("exact derivative order > 2".into())),
        })
    }))
}

/// The three worked examples, in order.
pub fn builtin_examples() -> Vec<ProblemSpec> {
    vec![example1(), example2(), example3()]
}

/// Looks up a built-in example by name (`ex1`, `ex2`, `ex3`).
pub fn builtin_example(name: &str) -> Option<ProblemSpec> {
    match name {
        "ex1" => Some(example1()),
        "ex2" => Some(example2()),
        "ex3" => Some(example3()),
        _ => None,
    }
}
