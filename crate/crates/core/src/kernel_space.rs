//! Reproducing kernels of `W(3,2)[a,T]` (functions with `u(a) = u'(a) = 0` and
//! square-integrable third derivative) and of `W(1,2)[a,T]`.
//!
//! The `W(3,2)` inner product is
//!
//! ```text
//! <u, v> = u(a)v(a) + u'(a)v'(a) + u''(a)v''(a) + integral_a^T u'''(s) v'''(s) ds
//! ```
//!
//! and its kernel `R_x(y)` is, for fixed `x`, a quintic in `y` on each side of
//! `y = x`. The twelve coefficients are pinned down by
//!
//! * `R_x(a) = 0`, `dR_x(a) = 0` (the section lies in the space),
//! * `d2R_x(a) = d3R_x(a)` and `d3R_x(T) = d4R_x(T) = d5R_x(T) = 0`,
//! * continuity of derivatives of order 0..=4 across `y = x`,
//! * a jump of `-1` in the fifth derivative across `y = x`,
//!
//! all derivatives taken in `y`. Coefficients are stored in powers of `y - a`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Mutex;

use lru::LruCache;
use nalgebra::{SMatrix, SVector};

use crate::error::{Result, RkhsError};
use crate::quadrature;

/// Highest `y`-derivative order available from [`W23Kernel::eval`].
pub const MAX_KERNEL_ORDER: usize = 5;

const CACHE_CAPACITY: usize = 4096;

/// A closed interval `[a, T]` with `a < T`, both finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    start: f64,
    end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || start >= end {
            return Err(RkhsError::Argument(format!(
                "interval needs finite a < T, got [{start}, {end}]"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn unit() -> Self {
        Self {
            start: 0.0,
            end: 1.0,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Membership with a few ulps of slack at the ends, so that grid points
    /// computed as `a + i*(T-a)/n` land inside.
    pub fn contains(&self, x: f64) -> bool {
        let slack = 4.0 * f64::EPSILON * self.start.abs().max(self.end.abs()).max(1.0);
        x >= self.start - slack && x <= self.end + slack
    }

    pub(crate) fn check(&self, x: f64, what: &str) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(RkhsError::Domain(format!(
                "{what} = {x} lies outside [{}, {}]",
                self.start, self.end
            )))
        }
    }
}

/// The two quintic branches of a kernel section `R_x(.)`, as coefficients of
/// `(y - a)^j`, `j = 0..=5`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchCoefficients {
    /// Branch used for `y <= x`.
    pub below: [f64; 6],
    /// Branch used for `y > x`.
    pub above: [f64; 6],
}

/// `j! / (j - m)!`, zero when `m > j`.
pub(crate) fn falling(j: usize, m: usize) -> f64 {
    if m > j {
        return 0.0;
    }
    ((j - m + 1)..=j).map(|v| v as f64).product()
}

/// Value of the `m`-th derivative of `sum c_j t^j` at `t`.
pub fn poly_derivative(coeffs: &[f64; 6], t: f64, m: usize) -> f64 {
    if m > 5 {
        return 0.0;
    }
    // Horner on the differentiated coefficients.
    let mut acc = 0.0;
    for j in (m..6).rev() {
        acc = acc * t + coeffs[j] * falling(j, m);
    }
    acc
}

fn derivative_row(t: f64, m: usize) -> [f64; 6] {
    let mut row = [0.0; 6];
    for (j, slot) in row.iter_mut().enumerate().skip(m) {
        *slot = falling(j, m) * t.powi((j - m) as i32);
    }
    row
}

/// Solves the 12-condition system for the section at `x`.
fn solve_section(interval: &Interval, x: f64) -> Result<BranchCoefficients> {
    let s = x - interval.start;
    let tau = interval.length();
    let mut m = SMatrix::<f64, 12, 12>::zeros();
    let mut rhs = SVector::<f64, 12>::zeros();

    let mut put = |row: usize, offset: usize, values: [f64; 6], sign: f64| {
        for (j, v) in values.iter().enumerate() {
            m[(row, offset + j)] += sign * v;
        }
    };
    // Left end: value, slope, and d2 - d3 of the lower branch.
    put(0, 0, derivative_row(0.0, 0), 1.0);
    put(1, 0, derivative_row(0.0, 1), 1.0);
    put(2, 0, derivative_row(0.0, 2), 1.0);
    put(2, 0, derivative_row(0.0, 3), -1.0);
    // Right end: orders 3, 4, 5 of the upper branch.
    for (row, order) in (3..6).zip(3..6) {
        put(row, 6, derivative_row(tau, order), 1.0);
    }
    // Matching across y = x.
    for order in 0..6 {
        let row = 6 + order;
        put(row, 6, derivative_row(s, order), 1.0);
        put(row, 0, derivative_row(s, order), -1.0);
    }
    rhs[11] = -1.0;

    let solution = m.full_piv_lu().solve(&rhs).ok_or_else(|| {
        RkhsError::Numeric(format!("kernel coefficient system is singular at x = {x}"))
    })?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(RkhsError::Numeric(format!(
            "kernel coefficient system produced non-finite values at x = {x}"
        )));
    }
    let mut below = [0.0; 6];
    let mut above = [0.0; 6];
    below.copy_from_slice(&solution.as_slice()[..6]);
    above.copy_from_slice(&solution.as_slice()[6..]);
    Ok(BranchCoefficients { below, above })
}

/// Reproducing kernel of `W(3,2)[a,T]`.
///
/// Two evaluation routes are kept:
///
/// * [`eval`](Self::eval) solves the 12x12 condition system for the requested
///   `x` (memoized in an LRU cache) and differentiates the selected branch in
///   `y`;
/// * [`partial`](Self::partial) uses a bivariate polynomial table for the
///   `y <= x` triangle, built once from the same per-point solves, and gives
///   mixed derivatives in `x` and `y`. The `y > x` triangle follows from
///   symmetry. This is what the collocation assembly uses.
pub struct W23Kernel {
    interval: Interval,
    /// `lower[i][j]` multiplies `(x - a)^i (y - a)^j` on `y <= x`.
    lower: [[f64; 6]; 6],
    cache: Mutex<LruCache<u64, BranchCoefficients>>,
}

impl std::fmt::Debug for W23Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("W23Kernel")
            .field("interval", &self.interval)
            .field("lower", &self.lower)
            .finish_non_exhaustive()
    }
}

impl W23Kernel {
    pub fn new(interval: Interval) -> Result<Self> {
        // Branch coefficients are polynomials of degree <= 5 in x, so six
        // Chebyshev nodes determine them.
        let tau = interval.length();
        let nodes: Vec<f64> = (0..6)
            .map(|m| 0.5 * tau * (1.0 - (PI * (2 * m + 1) as f64 / 12.0).cos()))
            .collect();
        let mut vander = SMatrix::<f64, 6, 6>::zeros();
        let mut values = SMatrix::<f64, 6, 6>::zeros();
        for (row, &s) in nodes.iter().enumerate() {
            for col in 0..6 {
                vander[(row, col)] = s.powi(col as i32);
            }
            let section = solve_section(&interval, interval.start + s)?;
            for (col, v) in section.below.iter().enumerate() {
                values[(row, col)] = *v;
            }
        }
        let table = vander
            .full_piv_lu()
            .solve(&values)
            .ok_or_else(|| RkhsError::Numeric("kernel interpolation system is singular".into()))?;
        let mut lower = [[0.0; 6]; 6];
        for (i, row) in lower.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = table[(i, j)];
            }
        }
        Ok(Self {
            interval,
            lower,
            cache: Mutex::new(LruCache::new(
                NonZeroUsize::new(CACHE_CAPACITY).expect("nonzero capacity"),
            )),
        })
    }

    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    /// Branch coefficients of the section `R_x(.)` from the 12x12 condition
    /// solve.
    pub fn coefficients(&self, x: f64) -> Result<BranchCoefficients> {
        self.interval.check(x, "kernel point x")?;
        let key = x.to_bits();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*hit);
        }
        let fresh = solve_section(&self.interval, x)?;
        self.cache.lock().expect("cache lock").put(key, fresh);
        Ok(fresh)
    }

    /// `d^order/dy^order R_x(y)`. At `y == x` the `y <= x` branch is used.
    pub fn eval(&self, x: f64, y: f64, dy_order: usize) -> Result<f64> {
        if dy_order > MAX_KERNEL_ORDER {
            return Err(RkhsError::Argument(format!(
                "kernel derivative order {dy_order} exceeds {MAX_KERNEL_ORDER}"
            )));
        }
        self.interval.check(y, "kernel argument y")?;
        let coeffs = self.coefficients(x)?;
        let t = y - self.interval.start;
        let branch = if y <= x { &coeffs.below } else { &coeffs.above };
        Ok(poly_derivative(branch, t, dy_order))
    }

    /// Mixed partial `d^dx/dx^dx d^dy/dy^dy R(x, y)` from the bivariate table.
    ///
    /// No domain checks; callers pass points already validated against the
    /// interval. Mixed orders with `dx + dy <= 4` are continuous across the
    /// diagonal; above that the `y <= x` side is returned on the diagonal.
    pub fn partial(&self, x: f64, y: f64, dx: usize, dy: usize) -> f64 {
        let s = x - self.interval.start;
        let t = y - self.interval.start;
        // On y > x use R(x, y) = R(y, x) = P(t, s).
        let (p, q, dp, dq) = if y <= x {
            (s, t, dx, dy)
        } else {
            (t, s, dy, dx)
        };
        let mut acc = 0.0;
        for i in (dp..6).rev() {
            let mut inner = 0.0;
            for j in (dq..6).rev() {
                inner = inner * q + self.lower[i][j] * falling(j, dq);
            }
            acc = acc * p + inner * falling(i, dp);
        }
        acc
    }

    /// The section `y -> R_x(y)` as a [`Differentiable`] function.
    pub fn section(&self, x: f64) -> KernelSection<'_> {
        KernelSection { kernel: self, x }
    }
}

/// Reproducing kernel of `W(1,2)[a,T]` with inner product
/// `u(a)v(a) + integral u'v'`:
///
/// ```text
/// G_x(y) = [cosh(x + y - (a + T)) + cosh(|x - y| + a - T)] / (2 sinh(T - a))
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct W21Kernel {
    interval: Interval,
}

impl W21Kernel {
    pub fn new(interval: Interval) -> Self {
        Self { interval }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.interval.check(x, "kernel point x")?;
        self.interval.check(y, "kernel argument y")?;
        let a = self.interval.start;
        let t = self.interval.end;
        Ok(((x + y - (a + t)).cosh() + ((x - y).abs() + a - t).cosh()) / (2.0 * (t - a).sinh()))
    }
}

/// A function that can report its derivatives of order 0..=3.
pub trait Differentiable {
    fn derivative(&self, order: usize, x: f64) -> f64;
}

impl<F: Fn(usize, f64) -> f64> Differentiable for F {
    fn derivative(&self, order: usize, x: f64) -> f64 {
        self(order, x)
    }
}

/// `y -> R_x(y)` for a fixed `x`.
#[derive(Clone, Copy, Debug)]
pub struct KernelSection<'k> {
    kernel: &'k W23Kernel,
    x: f64,
}

impl Differentiable for KernelSection<'_> {
    fn derivative(&self, order: usize, y: f64) -> f64 {
        self.kernel
            .eval(self.x, y, order)
            .expect("kernel section evaluated inside its interval")
    }
}

/// Default absolute tolerance for [`w23_inner_product`].
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-12;

/// `W(3,2)` inner product evaluated with adaptive quadrature.
pub fn w23_inner_product(
    u: &dyn Differentiable,
    v: &dyn Differentiable,
    interval: &Interval,
    tol: f64,
) -> Result<f64> {
    w23_inner_product_with_breaks(u, v, interval, tol, &[])
}

/// [`w23_inner_product`] with a starting partition at `breaks` (points where
/// `u'''` or `v'''` are not smooth).
pub fn w23_inner_product_with_breaks(
    u: &dyn Differentiable,
    v: &dyn Differentiable,
    interval: &Interval,
    tol: f64,
    breaks: &[f64],
) -> Result<f64> {
    let a = interval.start;
    let boundary: f64 = (0..3)
        .map(|i| u.derivative(i, a) * v.derivative(i, a))
        .sum();
    let integral = quadrature::integrate_with_breaks(
        |s| u.derivative(3, s) * v.derivative(3, s),
        a,
        interval.end,
        breaks,
        tol,
    )?;
    Ok(boundary + integral)
}
