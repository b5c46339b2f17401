//! Collocation points, the operator-image basis and its orthonormalization.
//!
//! With `L = d2/dx2 + (k/x) d/dx`, the basis functions are
//! `psi_i(x) = L_y R(x, y) |_{y = x_i}`. They satisfy `<u, psi_i> = (Lu)(x_i)`
//! for every `u` in the space, so their Gram matrix is
//! `G_ij = L_x L_y R(x, y) |_{x = x_i, y = x_j}`. The orthonormal system is
//! `psibar_i = sum_{k <= i} beta_ik psi_k` with `beta` lower triangular,
//! `beta_ii > 0`, `beta G beta^T = I`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Result, RkhsError};
use crate::kernel_space::{Interval, W23Kernel};
use crate::par::{map_indices, try_map_indices, Parallelism};

/// Strictly increasing collocation points in `(a, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<f64>,
}

impl PointSet {
    pub fn new(interval: &Interval, points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(RkhsError::Argument("point set must not be empty".into()));
        }
        for (i, &x) in points.iter().enumerate() {
            if !(x > interval.start()) || !interval.contains(x) {
                return Err(RkhsError::Argument(format!(
                    "point {i} = {x} is outside ({}, {}]",
                    interval.start(),
                    interval.end()
                )));
            }
            if i > 0 && x <= points[i - 1] {
                return Err(RkhsError::Argument(format!(
                    "points must be strictly increasing (point {i} = {x})"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `x_i = a + i (T - a) / n` for `i = 1..=n`; never includes `a` itself.
pub fn uniform_points(interval: &Interval, n: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(RkhsError::Argument("n must be ≥ 1".into()));
    }
    let a = interval.start();
    let h = interval.length() / n as f64;
    let mut points: Vec<f64> = (1..=n).map(|i| a + i as f64 * h).collect();
    points[n - 1] = interval.end();
    PointSet::new(interval, points)
}

fn singular_check(interval: &Interval, x_i: f64) -> Result<()> {
    if x_i <= interval.start() {
        return Err(RkhsError::Singularity(format!(
            "collocation point {x_i} must lie strictly right of a = {}",
            interval.start()
        )));
    }
    if x_i == 0.0 {
        return Err(RkhsError::Singularity("collocation point at x = 0".into()));
    }
    Ok(())
}

/// `psi_i(x) = d2R_x(y)/dy2 + (k/x_i) dR_x(y)/dy` at `y = x_i`, evaluated
/// through the per-point kernel solve.
pub fn psi_eval(kernel: &W23Kernel, k: f64, x_i: f64, x: f64) -> Result<f64> {
    singular_check(kernel.interval(), x_i)?;
    Ok(kernel.eval(x, x_i, 2)? + k / x_i * kernel.eval(x, x_i, 1)?)
}

/// `d^deriv psi_i / dx^deriv` from the bivariate kernel table.
pub(crate) fn psi_partial(kernel: &W23Kernel, k: f64, x_i: f64, x: f64, deriv: usize) -> f64 {
    kernel.partial(x, x_i, deriv, 2) + k / x_i * kernel.partial(x, x_i, deriv, 1)
}

/// `G_ij = L_x L_y R(x_i, x_j)`, symmetrized as `(G + G^T)/2`.
pub fn gram_matrix(
    kernel: &W23Kernel,
    k: f64,
    points: &PointSet,
    mode: Parallelism,
) -> Result<DMatrix<f64>> {
    let xs = points.as_slice();
    for &x in xs {
        singular_check(kernel.interval(), x)?;
    }
    let n = xs.len();
    let entries = try_map_indices(n * n, mode, |idx| {
        let (i, j) = (idx / n, idx % n);
        let (xi, xj) = (xs[i], xs[j]);
        let (ci, cj) = (k / xi, k / xj);
        let v = kernel.partial(xi, xj, 2, 2)
            + cj * kernel.partial(xi, xj, 2, 1)
            + ci * kernel.partial(xi, xj, 1, 2)
            + ci * cj * kernel.partial(xi, xj, 1, 1);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(RkhsError::Numeric(format!(
                "Gram entry ({i}, {j}) is not finite"
            )))
        }
    })?;
    let g = DMatrix::from_row_slice(n, n, &entries);
    Ok((&g + g.transpose()) * 0.5)
}

/// Lower Cholesky factor `C` with `gram = C C^T`.
pub fn cholesky(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    if n != gram.ncols() {
        return Err(RkhsError::Argument("Gram matrix must be square".into()));
    }
    let mut c = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = gram[(i, j)];
            for m in 0..j {
                sum -= c[(i, m)] * c[(j, m)];
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(RkhsError::Numeric(format!(
                        "Gram matrix is not positive definite: leading minor {} fails \
                         (pivot {sum:e}); reduce n or spread the points apart",
                        i + 1
                    )));
                }
                c[(i, i)] = sum.sqrt();
            } else {
                c[(i, j)] = sum / c[(j, j)];
            }
        }
    }
    Ok(c)
}

/// Inverse of a lower-triangular matrix with nonzero diagonal, by forward
/// substitution column by column.
fn invert_lower(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let mut inv = DMatrix::<f64>::zeros(n, n);
    for col in 0..n {
        inv[(col, col)] = 1.0 / c[(col, col)];
        for row in (col + 1)..n {
            let mut sum = 0.0;
            for m in col..row {
                sum += c[(row, m)] * inv[(m, col)];
            }
            inv[(row, col)] = -sum / c[(row, row)];
        }
    }
    inv
}

/// Orthonormalization coefficients `beta = C^{-1}` where `gram = C C^T`.
pub fn orthonormalize(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c = cholesky(gram)?;
    Ok(invert_lower(&c))
}

/// The classical Gram-Schmidt recurrence for the same coefficients:
///
/// ```text
/// c_ik = <psi_i, psibar_k> = sum_{m <= k} beta_km G_im        (k < i)
/// d_i  = sqrt(G_ii - sum_{k < i} c_ik^2)
/// beta_ii = 1 / d_i
/// beta_ij = -(1/d_i) sum_{k = j}^{i-1} c_ik beta_kj           (j < i)
/// ```
///
/// Kept as an independent check on [`orthonormalize`]; it loses orthogonality
/// for large `n`.
pub fn gram_schmidt_beta(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    let mut beta = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let c: Vec<f64> = (0..i)
            .map(|k| (0..=k).map(|m| beta[(k, m)] * gram[(i, m)]).sum())
            .collect();
        let d2 = gram[(i, i)] - c.iter().map(|v| v * v).sum::<f64>();
        if !(d2 > 0.0) {
            return Err(RkhsError::Numeric(format!(
                "Gram-Schmidt breakdown at index {}",
                i + 1
            )));
        }
        let d = d2.sqrt();
        beta[(i, i)] = 1.0 / d;
        for j in 0..i {
            let s: f64 = (j..i).map(|k| c[k] * beta[(k, j)]).sum();
            beta[(i, j)] = -s / d;
        }
    }
    Ok(beta)
}

/// Everything the solver needs about a set of collocation points.
#[derive(Debug)]
pub struct CollocationBasis {
    kernel: Arc<W23Kernel>,
    k: f64,
    points: PointSet,
    gram: DMatrix<f64>,
    beta: DMatrix<f64>,
    /// `psi_nodes[(j, m)] = psi_m(x_j)`.
    psi_nodes: DMatrix<f64>,
    /// `psibar_nodes[(j, i)] = psibar_i(x_j)`.
    psibar_nodes: DMatrix<f64>,
}

impl CollocationBasis {
    pub fn build(kernel: Arc<W23Kernel>, k: f64, points: PointSet) -> Result<Self> {
        Self::build_with(kernel, k, points, Parallelism::default())
    }

    pub fn build_with(
        kernel: Arc<W23Kernel>,
        k: f64,
        points: PointSet,
        mode: Parallelism,
    ) -> Result<Self> {
        if !k.is_finite() {
            return Err(RkhsError::Argument(format!("k = {k} is not finite")));
        }
        let gram = gram_matrix(&kernel, k, &points, mode)?;
        let beta = orthonormalize(&gram)?;
        let xs = points.as_slice();
        let n = xs.len();
        let psi = map_indices(n * n, mode, |idx| {
            let (j, m) = (idx / n, idx % n);
            psi_partial(&kernel, k, xs[m], xs[j], 0)
        });
        let psi_nodes = DMatrix::from_row_slice(n, n, &psi);
        let psibar_nodes = &psi_nodes * beta.transpose();
        Ok(Self {
            kernel,
            k,
            points,
            gram,
            beta,
            psi_nodes,
            psibar_nodes,
        })
    }

    /// Uniform points on the kernel's interval.
    pub fn uniform(kernel: Arc<W23Kernel>, k: f64, n: usize) -> Result<Self> {
        let points = uniform_points(kernel.interval(), n)?;
        Self::build(kernel, k, points)
    }

    pub fn kernel(&self) -> &Arc<W23Kernel> {
        &self.kernel
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn psi_nodes(&self) -> &DMatrix<f64> {
        &self.psi_nodes
    }

    pub fn psibar_nodes(&self) -> &DMatrix<f64> {
        &self.psibar_nodes
    }

    /// `d^deriv psi_m / dx^deriv` at `x` (unchecked).
    pub fn psi(&self, m: usize, x: f64, deriv: usize) -> f64 {
        psi_partial(&self.kernel, self.k, self.points.as_slice()[m], x, deriv)
    }

    /// `d^deriv psibar_i / dx^deriv` at `x` (unchecked).
    pub fn psibar(&self, i: usize, x: f64, deriv: usize) -> f64 {
        (0..=i)
            .map(|m| self.beta[(i, m)] * self.psi(m, x, deriv))
            .sum()
    }

    /// Largest entry of `|beta G beta^T - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.len();
        let prod = &self.beta * &self.gram * self.beta.transpose();
        (prod - DMatrix::<f64>::identity(n, n)).amax()
    }
}
