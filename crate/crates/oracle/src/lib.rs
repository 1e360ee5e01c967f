//! Brute-force reference solvers.
//!
//! Everything here is deliberately naive: dense grids, golden-section
//! refinement and plain bisection. The routines only see closures over raw
//! `f64` slices, so they share no code path with the library they are used
//! to check. Objectives report `f64::INFINITY` outside their domain.

use std::fmt;

/// Smallest resolution accepted by [`grid_argmin`].
pub const MIN_RESOLUTION: usize = 1000;

/// Width at which refinement stops.
pub const REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    UnsupportedDimension(usize),
    ResolutionTooLow(usize),
    EmptyBox,
    AllInfinite,
    NoSignChange,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::UnsupportedDimension(n) => {
                write!(f, "grid oracle supports 1-D and 2-D boxes only, got {n}-D")
            }
            OracleError::ResolutionTooLow(r) => {
                write!(f, "resolution {r} below the minimum of {MIN_RESOLUTION}")
            }
            OracleError::EmptyBox => write!(f, "box has an empty or non-finite side"),
            OracleError::AllInfinite => write!(f, "objective is infinite on every grid point"),
            OracleError::NoSignChange => write!(f, "bracket does not contain a sign change"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Result of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMin {
    pub point: Vec<f64>,
    pub value: f64,
}

fn grid_coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    // (hi-lo)*i/n keeps integer-valued nodes exact on boxes like [-2, 2].
    lo + ((hi - lo) * i as f64) / n as f64
}

/// Golden-section search on `[a, b]`, returning the best point seen.
fn golden<F: FnMut(f64) -> f64>(mut obj: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (a, obj(a));
    let fb = obj(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = obj(c);
    let mut fd = obj(d);
    for (p, v) in [(c, fc), (d, fd)] {
        if v < best.1 {
            best = (p, v);
        }
    }
    while (b - a).abs() > REFINE_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c);
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

/// Global minimizer of `objective` over a 1-D or 2-D box by exhaustive grid
/// evaluation followed by local golden-section refinement to [`REFINE_TOL`].
///
/// The grid includes both box endpoints, so objectives supported on a finite
/// set of grid nodes (e.g. indicator of `{-1, 1}` on `[-2, 2]`) are handled.
pub fn grid_argmin<F>(objective: F, bounds: &[(f64, f64)], resolution: usize) -> Result<GridMin, OracleError>
where
    F: Fn(&[f64]) -> f64,
{
    if resolution < MIN_RESOLUTION {
        return Err(OracleError::ResolutionTooLow(resolution));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && hi > lo)) {
        return Err(OracleError::EmptyBox);
    }
    match bounds.len() {
        1 => grid_1d(&objective, bounds[0], resolution),
        2 => grid_2d(&objective, bounds[0], bounds[1], resolution),
        n => Err(OracleError::UnsupportedDimension(n)),
    }
}

fn grid_1d<F: Fn(&[f64]) -> f64>(obj: &F, (lo, hi): (f64, f64), n: usize) -> Result<GridMin, OracleError> {
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=n {
        let x = grid_coord(lo, hi, i, n);
        let v = obj(&[x]);
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((x, v));
        }
    }
    let (x0, v0) = best.ok_or(OracleError::AllInfinite)?;
    if v0 == f64::INFINITY {
        return Err(OracleError::AllInfinite);
    }
    let step = (hi - lo) / n as f64;
    let (xr, vr) = golden(|t| obj(&[t]), (x0 - step).max(lo), (x0 + step).min(hi));
    let (x, v) = if vr < v0 { (xr, vr) } else { (x0, v0) };
    Ok(GridMin { point: vec![x], value: v })
}

fn grid_2d<F: Fn(&[f64]) -> f64>(
    obj: &F,
    (lo0, hi0): (f64, f64),
    (lo1, hi1): (f64, f64),
    n: usize,
) -> Result<GridMin, OracleError> {
    let mut best: Option<([f64; 2], f64)> = None;
    for i in 0..=n {
        let x = grid_coord(lo0, hi0, i, n);
        for j in 0..=n {
            let y = grid_coord(lo1, hi1, j, n);
            let v = obj(&[x, y]);
            if v.is_nan() {
                continue;
            }
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some(([x, y], v));
            }
        }
    }
    let (mut p, mut v) = best.ok_or(OracleError::AllInfinite)?;
    if v == f64::INFINITY {
        return Err(OracleError::AllInfinite);
    }
    let mut h = [(hi0 - lo0) / n as f64, (hi1 - lo1) / n as f64];
    let bounds = [(lo0, hi0), (lo1, hi1)];
    // coordinate descent with a shrinking window
    for _ in 0..200 {
        for c in 0..2 {
            let (lo, hi) = bounds[c];
            let (t, vt) = golden(
                |t| {
                    let mut q = p;
                    q[c] = t;
                    obj(&q)
                },
                (p[c] - h[c]).max(lo),
                (p[c] + h[c]).min(hi),
            );
            if vt < v {
                p[c] = t;
                v = vt;
            }
        }
        h[0] *= 0.5;
        h[1] *= 0.5;
        if h[0] < REFINE_TOL && h[1] < REFINE_TOL {
            break;
        }
    }
    Ok(GridMin { point: p.to_vec(), value: v })
}

/// Envelope value `inf_w model(w)` by grid search; `model` must already be
/// specialized to the pair `(x, x^-)` of interest.
pub fn reference_envelope<F>(model: F, bounds: &[(f64, f64)], resolution: usize) -> Result<GridMin, OracleError>
where
    F: Fn(&[f64]) -> f64,
{
    grid_argmin(model, bounds, resolution)
}

/// Distance from zero to the one-sided-difference estimate of the regular
/// subdifferential of a 1-D function at `x`.
///
/// Uses `[d-, d+]` with backward/forward quotients of width `step`; an
/// infinite neighbour makes the corresponding side unbounded. Returns
/// `f64::INFINITY` when `d- > d+` (no regular subgradient).
pub fn subgradient_distance_1d<F: Fn(f64) -> f64>(phi: F, x: f64, step: f64) -> f64 {
    let v = phi(x);
    if !v.is_finite() {
        return f64::INFINITY;
    }
    let right = phi(x + step);
    let left = phi(x - step);
    let d_plus = if right.is_finite() { (right - v) / step } else { f64::INFINITY };
    let d_minus = if left.is_finite() { (v - left) / step } else { f64::NEG_INFINITY };
    if d_minus > d_plus {
        return f64::INFINITY;
    }
    if d_minus > 0.0 {
        d_minus
    } else if d_plus < 0.0 {
        -d_plus
    } else {
        0.0
    }
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, OracleError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(OracleError::NoSignChange);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if mid == lo && mid == hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
