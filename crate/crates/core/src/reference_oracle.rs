//! Independent check: adaptive Dormand-Prince 5(4) on the first-order system
//! `(u, u')`, with the removable `k/x` singularity handled at `x = 0`.
//!
//! Shares nothing with the kernel machinery except the problem definition.

use crate::error::{Result, RkhsError};
use crate::problem_model::ProblemSpec;

/// Radius around `x = 0` inside which the limit form of the equation is used.
pub const REGULARIZATION_RADIUS: f64 = 1e-8;

/// `u''` from the equation. Near `x = 0` (where `beta = 0` is required) uses
/// `(k/x) u' -> k u''(0)`, giving `u'' = F(x, u) / (1 + k)`.
pub fn regularized_rhs(p: &ProblemSpec, x: f64, u: f64, up: f64) -> Result<f64> {
    if x < p.interval.start() {
        return Err(RkhsError::Domain(format!(
            "x = {x} is left of a = {}",
            p.interval.start()
        )));
    }
    let f = p.rhs(x, u)?;
    if p.k != 0.0 && x.abs() <= REGULARIZATION_RADIUS {
        if p.interval.start() == 0.0 && p.beta != 0.0 {
            return Err(RkhsError::Singularity(format!(
                "u'(0) = {} is nonzero, so (k/x) u' has no finite limit at x = 0",
                p.beta
            )));
        }
        return Ok(f / (1.0 + p.k));
    }
    Ok(f - p.k / x * up)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    /// Local error target per step (mixed absolute/relative).
    pub tol: f64,
    pub max_steps: usize,
    /// Step cap as a fraction of `T - a`; keeps the cubic Hermite dense output
    /// accurate.
    pub max_step_fraction: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 200_000,
            max_step_fraction: 1.0 / 256.0,
        }
    }
}

/// Accepted steps of an integration plus Hermite interpolation between them.
#[derive(Clone, Debug)]
pub struct OracleTrajectory {
    xs: Vec<f64>,
    us: Vec<f64>,
    ups: Vec<f64>,
    upps: Vec<f64>,
    pub tol: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl OracleTrajectory {
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.xs
            .iter()
            .zip(&self.us)
            .zip(&self.ups)
            .map(|((&x, &u), &up)| (x, u, up))
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let (first, last) = (self.xs[0], *self.xs.last().expect("non-empty"));
        if !(x >= first && x <= last) {
            return Err(RkhsError::Domain(format!(
                "x = {x} outside the integrated range [{first}, {last}]"
            )));
        }
        let idx = self.xs.partition_point(|&s| s <= x);
        Ok(idx.clamp(1, self.xs.len() - 1) - 1)
    }

    fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// `u(x)` by cubic Hermite interpolation on `(u, u')`.
    pub fn value(&self, x: f64) -> Result<f64> {
        let i = self.locate(x)?;
        Ok(Self::hermite(
            self.xs[i],
            self.xs[i + 1],
            self.us[i],
            self.us[i + 1],
            self.ups[i],
            self.ups[i + 1],
            x,
        ))
    }

    /// `u'(x)` by cubic Hermite interpolation on `(u', u'')`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        let i = self.locate(x)?;
        Ok(Self::hermite(
            self.xs[i],
            self.xs[i + 1],
            self.ups[i],
            self.ups[i + 1],
            self.upps[i],
            self.upps[i + 1],
            x,
        ))
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `a` to `T` with default options at tolerance `tol`.
pub fn integrate(p: &ProblemSpec, tol: f64, max_steps: usize) -> Result<OracleTrajectory> {
    integrate_with(
        p,
        &OracleOptions {
            tol,
            max_steps,
            ..OracleOptions::default()
        },
    )
}

pub fn integrate_with(p: &ProblemSpec, opts: &OracleOptions) -> Result<OracleTrajectory> {
    if !(opts.tol > 0.0) {
        return Err(RkhsError::Argument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let a = p.interval.start();
    let end = p.interval.end();
    let span = end - a;
    let h_max = span * opts.max_step_fraction;
    let h_min = span * 1e-14;

    let rhs = |x: f64, y: [f64; 2]| -> Result<[f64; 2]> {
        let upp = regularized_rhs(p, x, y[0], y[1]).map_err(|e| match e {
            RkhsError::Domain(msg) => RkhsError::Domain(format!("at x = {x}: {msg}")),
            other => other,
        })?;
        Ok([y[1], upp])
    };

    let mut x = a;
    let mut y = [p.alpha, p.beta];
    let mut k1 = rhs(x, y)?;
    let mut traj = OracleTrajectory {
        xs: vec![x],
        us: vec![y[0]],
        ups: vec![y[1]],
        upps: vec![k1[1]],
        tol: opts.tol,
        accepted: 0,
        rejected: 0,
    };
    let mut h = (span * 1e-3).min(h_max);

    while x < end {
        if traj.accepted + traj.rejected >= opts.max_steps {
            return Err(RkhsError::Numeric(format!(
                "step budget {} exhausted at x = {x}",
                opts.max_steps
            )));
        }
        if x + h > end {
            h = end - x;
        }
        let mut k = [[0.0; 2]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (r, kr) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][r] * kr[0];
                ys[1] += h * A[s][r] * kr[1];
            }
            k[s] = rhs(x + C[s] * h, ys)?;
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B5[s] * k[s][c];
                lo += B4[s] * k[s][c];
            }
            y5[c] += h * hi;
            let scale = opts.tol * (1.0 + y[c].abs().max(y5[c].abs()));
            err = err.max((h * (hi - lo)).abs() / scale);
        }
        if !err.is_finite() {
            return Err(RkhsError::Numeric(format!("non-finite step at x = {x}")));
        }
        if err <= 1.0 {
            x = if end - (x + h) <= h_min { end } else { x + h };
            y = y5;
            // FSAL: the last stage is the derivative at the new point.
            k1 = k[6];
            traj.xs.push(x);
            traj.us.push(y[0]);
            traj.ups.push(y[1]);
            traj.upps.push(k1[1]);
            traj.accepted += 1;
        } else {
            traj.rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(h_max);
        if h < h_min && x < end {
            return Err(RkhsError::Numeric(format!(
                "step size underflow at x = {x}"
            )));
        }
    }
    Ok(traj)
}
