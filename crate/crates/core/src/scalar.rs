//! Safeguarded scalar root-finding for monotone equations.

use crate::error::{Error, Result};

/// Dual-residual tolerance used by inverse mirror maps.
pub const ROOT_TOL: f64 = 1e-12;

/// Solves `f(t) = target` for increasing `f` on `[lo, hi]`.
///
/// `f` returns `(value, derivative)`. Newton steps are taken when they stay
/// inside the current bracket, bisection otherwise. Converged when
/// `|f(t) - target| <= tol * max(1, |target|)`.
pub fn solve_increasing<F>(f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let scale = target.abs().max(1.0);
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(Error::RootFind(format!("non-finite bracket values on [{lo}, {hi}]")));
    }
    if (flo - target).abs() <= tol * scale {
        return Ok(lo);
    }
    if (fhi - target).abs() <= tol * scale {
        return Ok(hi);
    }
    if flo > target || fhi < target {
        return Err(Error::RootFind(format!(
            "target {target} not bracketed by [{flo}, {fhi}] on [{lo}, {hi}]"
        )));
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..400 {
        let (v, dv) = f(t);
        let res = v - target;
        if res.abs() <= tol * scale {
            return Ok(t);
        }
        if res < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = if dv > 0.0 { t - res / dv } else { f64::NAN };
        t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            // bracket collapsed to adjacent floats; accept the better end
            let (vl, _) = f(lo);
            let (vh, _) = f(hi);
            return Ok(if (vl - target).abs() <= (vh - target).abs() { lo } else { hi });
        }
    }
    Err(Error::RootFind(format!("no convergence for target {target}")))
}

/// Bisection for the unique zero of an increasing function on `[lo, hi]`,
/// run until the bracket stops shrinking.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    if f(lo) >= 0.0 {
        return lo;
    }
    if f(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
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
    fn cubic_radius() {
        let t = solve_increasing(|r| (r * r * r + r, 3.0 * r * r + 1.0), 10.0, 0.0, 10.0, ROOT_TOL).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unbracketed() {
        assert!(solve_increasing(|r| (r, 1.0), 5.0, 0.0, 1.0, ROOT_TOL).is_err());
    }

    #[test]
    fn bisection() {
        let t = bisect_increasing(|r| r - 0.25, 0.0, 1.0);
        assert!((t - 0.25).abs() < 1e-15);
    }
}
