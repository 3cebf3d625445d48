//! Adaptive Simpson quadrature and bisection root bracketing.
//!
//! Integrands in this crate are smooth between known breakpoints, so the
//! caller splits the domain first and each piece is integrated with a
//! plain recursive Simpson scheme.

use crate::error::{Error, Result};

/// Absolute tolerance used for smooth segments.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Tolerance for locating a decision switch point.
pub const BISECTION_TOLERANCE: f64 = 1e-12;

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[lo, hi]` to absolute tolerance `tol`.
///
/// Returns `Error::Numeric` if the error estimates left on subintervals
/// where the recursion depth ran out add up to more than `tol`.
pub fn adaptive_simpson<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if hi <= lo {
        return Ok(0.0);
    }
    let mid = 0.5 * (lo + hi);
    let (fa, fm, fb) = (f(lo), f(mid), f(hi));
    let whole = simpson(lo, hi, fa, fm, fb);
    let mut residual = 0.0f64;
    let value = recurse(&f, lo, hi, fa, fm, fb, whole, tol, MAX_DEPTH, &mut residual);
    if residual > tol {
        return Err(Error::Numeric {
            lo,
            hi,
            achieved: residual,
            requested: tol,
        });
    }
    Ok(value)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    residual: &mut f64,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *residual += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, residual)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, residual)
}

/// Locate the switch point of a predicate known to differ at `lo` and `hi`.
///
/// Returns a point within `tol` of the boundary; `pred(lo)` holds on the
/// side of the returned point closest to `lo`.
pub fn bisect_switch<P>(pred: P, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    P: Fn(f64) -> bool,
{
    let at_lo = pred(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| 3.0 * x * x + 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 14.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_transcendental() {
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(adaptive_simpson(|_| 1.0, 1.0, 1.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn unresolved_jump_reports_error() {
        // A jump at an irrational point cannot be resolved to 1e-30.
        let r = adaptive_simpson(
            |x| if x < 0.5f64.sqrt() { 0.0 } else { 1.0 },
            0.0,
            1.0,
            1e-30,
        );
        assert!(matches!(r, Err(Error::Numeric { .. })));
    }

    #[test]
    fn bisection_finds_threshold() {
        let t = bisect_switch(|c| c <= 0.3125, 0.0, 1.0, 1e-13);
        assert!((t - 0.3125).abs() < 1e-12);
    }
}
