//! Problems defined by expression strings, from TOML files or flags.
//!
//! ```toml
//! name = "ex1"
//! k = 2
//! a = 0
//! T = 1
//! alpha = 0
//! beta = 0
//! rhs = "x^3 + x^2 + 12*x + 6 - u"
//! exact = "x^3 + x^2"   # optional
//! linear = true         # optional, see below
//! ```
//!
//! `linear` defaults to whether `rhs` is structurally affine in `u`; `false`
//! forces the nonlinear recursion, `true` is rejected for non-affine `rhs`.
//! Derivatives of `exact` are taken by Richardson-extrapolated finite
//! differences.

use std::path::Path;
use std::sync::Arc;

use rkhs_core::problem_model::{verify_exact, ExactCheck};
use rkhs_core::rhs_expr::{parse, Expr};
use rkhs_core::{Interval, ProblemSpec, RkhsError};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Residual or initial-condition mismatch above this makes the exact
/// expression suspect.
pub const EXACT_CHECK_LIMIT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDefinition {
    pub name: String,
    pub k: f64,
    pub a: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rhs: String,
    #[serde(default)]
    pub exact: Option<String>,
    #[serde(default)]
    pub linear: Option<bool>,
}

/// A problem plus anything worth telling the user about it.
#[derive(Debug)]
pub struct LoadedProblem {
    pub spec: ProblemSpec,
    pub exact_check: Option<ExactCheck>,
    pub warnings: Vec<String>,
}

/// Reads and builds a problem from a TOML file. With `strict`, a failed
/// exact-solution check is an error instead of a warning.
pub fn load_problem_config(path: &Path, strict: bool) -> CliResult<LoadedProblem> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let def: ProblemDefinition = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
    build_problem(&def, strict)
}

fn parse_field(field: &str, text: &str) -> CliResult<Expr> {
    parse(text).map_err(|error| CliError::Expression {
        field: field.to_string(),
        source_text: text.to_string(),
        error,
    })
}

pub fn build_problem(def: &ProblemDefinition, strict: bool) -> CliResult<LoadedProblem> {
    let interval = Interval::new(def.a, def.t)?;
    let rhs = Arc::new(parse_field("rhs", &def.rhs)?);
    let affine = rhs.is_affine_in_u();
    let linear = match def.linear {
        None => affine,
        Some(false) => false,
        Some(true) if affine => true,
        Some(true) => {
            return Err(CliError::Config(format!(
                "linear = true but rhs `{}` is not of the form g(x) + q(x)*u",
                def.rhs
            )))
        }
    };

    let f = rhs.clone();
    let mut spec = ProblemSpec::new(
        def.name.clone(),
        def.k,
        interval,
        def.alpha,
        def.beta,
        Arc::new(move |x, u| Ok(f.eval(x, u)?)),
    )?;
    if linear {
        let g = rhs.clone();
        let q = rhs.clone();
        spec = spec.with_affine(
            Arc::new(move |x| Ok(g.eval(x, 0.0)?)),
            Arc::new(move |x| Ok(q.eval(x, 1.0)? - q.eval(x, 0.0)?)),
        );
    }

    let mut warnings = Vec::new();
    let mut exact_check = None;
    if let Some(text) = &def.exact {
        let expr = parse_field("exact", text)?;
        if expr.mentions_u() {
            return Err(CliError::Config(format!(
                "exact solution `{text}` must depend on x only"
            )));
        }
        let expr = Arc::new(expr);
        let a = interval.start();
        let span = interval.length();
        spec = spec.with_exact(Arc::new(move |x, d| {
            let f = |t: f64| -> rkhs_core::Result<f64> { Ok(expr.eval(t, 0.0)?) };
            fd_derivative(&f, x, d, a, span)
        }));
        let check = verify_exact(&spec)?;
        if check.max_residual > EXACT_CHECK_LIMIT || check.ic_mismatch > EXACT_CHECK_LIMIT {
            let msg = format!(
                "exact solution `{text}` does not satisfy the problem: equation residual {:.3e}, \
                 initial-condition mismatch {:.3e} (limit {EXACT_CHECK_LIMIT:e})",
                check.max_residual, check.ic_mismatch
            );
            if strict {
                return Err(CliError::Config(msg));
            }
            warnings.push(msg);
        }
        exact_check = Some(check);
    }
    Ok(LoadedProblem {
        spec,
        exact_check,
        warnings,
    })
}

/// Derivative of order `order <= 2` of `f` at `x`. Stencils stay at or right
/// of `lo`, since `f` need not be defined left of the interval.
pub fn fd_derivative(
    f: &dyn Fn(f64) -> rkhs_core::Result<f64>,
    x: f64,
    order: usize,
    lo: f64,
    scale: f64,
) -> rkhs_core::Result<f64> {
    match order {
        0 => f(x),
        1 => {
            let h = 1e-3 * scale;
            if x - h >= lo {
                let d = |h: f64| Ok::<f64, RkhsError>((f(x + h)? - f(x - h)?) / (2.0 * h));
                Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
            } else {
                let d = |h: f64| {
                    Ok::<f64, RkhsError>(
                        (-3.0 * f(x)? + 4.0 * f(x + h)? - f(x + 2.0 * h)?) / (2.0 * h),
                    )
                };
                Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
            }
        }
        2 => {
            if x - 1e-2 * scale >= lo {
                let h = 1e-2 * scale;
                let d =
                    |h: f64| Ok::<f64, RkhsError>((f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h));
                Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
            } else {
                let h = 2e-3 * scale;
                let d = |h: f64| {
                    Ok::<f64, RkhsError>(
                        (2.0 * f(x)? - 5.0 * f(x + h)? + 4.0 * f(x + 2.0 * h)? - f(x + 3.0 * h)?)
                            / (h * h),
                    )
                };
                Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
            }
        }
        _ => Err(RkhsError::Argument(format!(
            "exact derivative order {order} > 2"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1_def() -> ProblemDefinition {
        ProblemDefinition {
            name: "ex1".into(),
            k: 2.0,
            a: 0.0,
            t: 1.0,
            alpha: 0.0,
            beta: 0.0,
            rhs: "x^3 + x^2 + 12*x + 6 - u".into(),
            exact: Some("x^3 + x^2".into()),
            linear: None,
        }
    }

    #[test]
    fn finite_differences() {
        let f = |x: f64| Ok((2.0 * x).sin());
        for &x in &[0.0, 0.001, 0.3, 1.0] {
            let d1 = fd_derivative(&f, x, 1, 0.0, 1.0).unwrap();
            let d2 = fd_derivative(&f, x, 2, 0.0, 1.0).unwrap();
            assert!((d1 - 2.0 * (2.0 * x).cos()).abs() < 1e-8, "x = {x}: {d1}");
            assert!((d2 + 4.0 * (2.0 * x).sin()).abs() < 1e-7, "x = {x}: {d2}");
        }
        assert!(fd_derivative(&f, 0.5, 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn affine_rhs_is_linear() {
        let p = build_problem(&ex1_def(), true).unwrap();
        assert!(p.spec.is_linear());
        assert!(p.warnings.is_empty());
        let check = p.exact_check.unwrap();
        assert!(check.max_residual < 1e-7, "{check:?}");
        let aff = p.spec.affine().unwrap();
        assert_eq!((aff.g)(1.0).unwrap(), 20.0);
        assert_eq!((aff.q)(0.3).unwrap(), -1.0);
    }

    #[test]
    fn linear_flag() {
        let mut def = ex1_def();
        def.linear = Some(false);
        assert!(!build_problem(&def, true).unwrap().spec.is_linear());
        def.rhs = "-4*(2*exp(u) + exp(u/2))".into();
        def.exact = None;
        def.linear = Some(true);
        assert!(matches!(
            build_problem(&def, true),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn wrong_exact_warns_or_fails() {
        let mut def = ex1_def();
        def.exact = Some("x^2".into());
        let loaded = build_problem(&def, false).unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        let err = build_problem(&def, true).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn expression_errors_carry_position() {
        let mut def = ex1_def();
        def.rhs = "x^3 +* u".into();
        let err = build_problem(&def, false).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let text = err.to_string();
        assert!(text.contains("offset 5"), "{text}");
        assert!(text.ends_with("     ^"), "{text}");
    }

    #[test]
    fn exact_must_not_use_u() {
        let mut def = ex1_def();
        def.exact = Some("u + x".into());
        assert!(matches!(
            build_problem(&def, false),
            Err(CliError::Config(_))
        ));
    }
}
