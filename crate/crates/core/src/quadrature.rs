//! Globally adaptive Gauss-Kronrod (7/15 point) quadrature.
//!
//! Only used to evaluate Sobolev inner products in verification code; the
//! solver itself never integrates numerically.

#![allow(clippy::excessive_precision)]

use crate::error::{Result, RkhsError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 4000;

#[derive(Clone, Copy, Debug)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (i, (&node, &weight)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * node;
        let pair = f(center - dx) + f(center + dx);
        kronrod += weight * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over `[lo, hi]` to absolute tolerance `tol`, bisecting the
/// segment with the largest error estimate until the summed estimate is small
/// enough.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    integrate_with_breaks(f, lo, hi, &[], tol)
}

/// Like [`integrate`], but starts from a partition at `breaks`. Points outside
/// `(lo, hi)` are ignored. Use this for integrands with known kinks or jumps.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(RkhsError::Argument(format!(
            "quadrature needs finite lo <= hi and tol > 0 (got [{lo}, {hi}], tol {tol})"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut segments: Vec<Segment> = edges.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(RkhsError::Numeric("non-finite integrand value".into()));
        }
        if error <= tol || error <= 50.0 * f64::EPSILON * value.abs() {
            return Ok(value);
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(RkhsError::Tolerance {
                tol,
                estimate: error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        if mid <= seg.lo || mid >= seg.hi {
            // Cannot split further in floating point; what is left is roundoff.
            return Err(RkhsError::Tolerance {
                tol,
                estimate: error,
            });
        }
        segments.push(gk15(&f, seg.lo, mid));
        segments.push(gk15(&f, mid, seg.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x| 7.0 * x.powi(6) - 3.0 * x * x, 0.0, 2.0, 1e-13).unwrap();
        assert!((v - (128.0 - 8.0)).abs() < 1e-11);
    }

    #[test]
    fn smooth_transcendental() {
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jump_at_break_is_exact() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { 5.0 };
        let v = integrate_with_breaks(step, 0.0, 1.0, &[0.3], 1e-13).unwrap();
        assert!((v - (0.3 + 3.5)).abs() < 1e-13);
    }

    #[test]
    fn jump_without_break_still_converges() {
        let step = |x: f64| if x < 1.0 / 3.0 { 1.0 } else { 0.0 };
        let v = integrate(step, 0.0, 1.0, 1e-9).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            integrate(|x| x, 0.0, 1.0, 0.0),
            Err(RkhsError::Argument(_))
        ));
    }
}
