//! Nonsmooth terms `g` and their tilted Bregman proximal maps
//! `argmin_w { gamma g(w) + h(w) - <tilt, w> }`.

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::kernel::{Kernel, Vector};
use crate::scalar::bisect_increasing;

/// Relative tolerance for declaring two subproblem values tied.
pub const TIE_TOL: f64 = 1e-12;

pub trait Nonsmooth: Send + Sync {
    fn name(&self) -> String;

    fn value(&self, x: &Vector) -> Ext;

    /// All minimizers of `gamma g + h - <tilt, .>` the oracle can identify,
    /// in a deterministic order. Never empty on success.
    fn tilted_prox(&self, kernel: &dyn Kernel, gamma: f64, tilt: &Vector) -> Result<Vec<Vector>>;
}

/// Objective of the tilted subproblem at `w`.
pub fn subproblem_value(g: &dyn Nonsmooth, kernel: &dyn Kernel, gamma: f64, tilt: &Vector, w: &Vector) -> Ext {
    g.value(w) * gamma + kernel.value(w) - tilt.dot(w)
}

/// Tilted prox for a separable convex `g` whose Euclidean prox is known,
/// paired with a radial kernel `grad h(w) = m(|w|) w`.
///
/// Optimality reads `m(r) w + gamma dg(w) ∋ tilt`, i.e.
/// `w = prox_{(gamma/m) g}(tilt / m)` with `r = |w|`. The radius solves
/// `r = |w(r)|` by bisection; `|w(r)|` must be nonincreasing in `m`, which
/// holds for l1 and for boxes containing the origin.
pub fn radial_tilted_prox<P>(kernel: &dyn Kernel, gamma: f64, tilt: &Vector, euclid_prox: P) -> Result<Vector>
where
    P: Fn(&Vector, f64) -> Vector,
{
    let m0 = kernel
        .radial_scale(0.0)
        .ok_or_else(|| Error::Prox(format!("kernel '{}' is not radial", kernel.name())))?;
    let at = |m: f64| euclid_prox(&(tilt / m), gamma / m);
    let w0 = at(m0);
    let r0 = w0.norm();
    if r0 == 0.0 {
        return Ok(w0);
    }
    let m_far = kernel.radial_scale(r0).unwrap_or(m0);
    if m_far == m0 {
        return Ok(w0);
    }
    let scale = |r: f64| kernel.radial_scale(r).unwrap_or(m0);
    let r = bisect_increasing(|r| r - at(scale(r)).norm(), 0.0, r0);
    let w = at(scale(r));
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Prox("non-finite radial prox".into()));
    }
    Ok(w)
}

/// `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Nonsmooth for Zero {
    fn name(&self) -> String {
        "zero".into()
    }
    fn value(&self, _x: &Vector) -> Ext {
        Ext::ZERO
    }
    fn tilted_prox(&self, kernel: &dyn Kernel, _gamma: f64, tilt: &Vector) -> Result<Vec<Vector>> {
        Ok(vec![kernel.inverse_gradient(tilt)?])
    }
}

pub(crate) fn soft_threshold(v: &Vector, t: f64) -> Vector {
    v.map(|x| x.signum() * (x.abs() - t).max(0.0))
}

/// `g = lambda |x|_1`.
#[derive(Debug, Clone, Copy)]
pub struct L1 {
    pub lambda: f64,
}

impl Nonsmooth for L1 {
    fn name(&self) -> String {
        format!("l1({})", self.lambda)
    }
    fn value(&self, x: &Vector) -> Ext {
        Ext::from_f64(self.lambda * x.lp_norm(1))
    }
    fn tilted_prox(&self, kernel: &dyn Kernel, gamma: f64, tilt: &Vector) -> Result<Vec<Vector>> {
        let lam = self.lambda;
        Ok(vec![radial_tilted_prox(kernel, gamma, tilt, |v, s| soft_threshold(v, s * lam))?])
    }
}

/// Indicator of the box `[lo, hi]`; the box must contain the origin.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    pub lo: Vector,
    pub hi: Vector,
}

impl BoxIndicator {
    pub fn symmetric(n: usize, radius: f64) -> Self {
        BoxIndicator { lo: Vector::from_element(n, -radius), hi: Vector::from_element(n, radius) }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.iter().zip(self.lo.iter().zip(self.hi.iter())).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn clip(&self, x: &Vector) -> Vector {
        Vector::from_fn(x.len(), |i, _| x[i].clamp(self.lo[i], self.hi[i]))
    }
}

impl Nonsmooth for BoxIndicator {
    fn name(&self) -> String {
        "box".into()
    }
    fn value(&self, x: &Vector) -> Ext {
        if self.contains(x) {
            Ext::ZERO
        } else {
            Ext::PosInf
        }
    }
    fn tilted_prox(&self, kernel: &dyn Kernel, gamma: f64, tilt: &Vector) -> Result<Vec<Vector>> {
        Ok(vec![radial_tilted_prox(kernel, gamma, tilt, |v, _| self.clip(v))?])
    }
}

/// `lambda |x|_1` restricted to a box containing the origin.
#[derive(Debug, Clone)]
pub struct L1Box {
    pub lambda: f64,
    pub bounds: BoxIndicator,
}

impl Nonsmooth for L1Box {
    fn name(&self) -> String {
        format!("l1({})+box", self.lambda)
    }
    fn value(&self, x: &Vector) -> Ext {
        if self.bounds.contains(x) {
            Ext::from_f64(self.lambda * x.lp_norm(1))
        } else {
            Ext::PosInf
        }
    }
    fn tilted_prox(&self, kernel: &dyn Kernel, gamma: f64, tilt: &Vector) -> Result<Vec<Vector>> {
        let lam = self.lambda;
        // separable 1-D convex pieces: clipping the unconstrained minimizer is exact
        Ok(vec![radial_tilted_prox(kernel, gamma, tilt, |v, s| self.bounds.clip(&soft_threshold(v, s * lam)))?])
    }
}

/// Indicator of a finite point set; the subproblem is solved by enumeration,
/// so every kernel is supported.
#[derive(Debug, Clone)]
pub struct FiniteSet {
    pub points: Vec<Vector>,
}

impl FiniteSet {
    /// `{-1, +1}` on the real line.
    pub fn plus_minus_one() -> Self {
        FiniteSet { points: vec![Vector::from_element(1, -1.0), Vector::from_element(1, 1.0)] }
    }
}

impl Nonsmooth for FiniteSet {
    fn name(&self) -> String {
        format!("finite-set({})", self.points.len())
    }
    fn value(&self, x: &Vector) -> Ext {
        if self.points.iter().any(|p| p == x) {
            Ext::ZERO
        } else {
            Ext::PosInf
        }
    }
    fn tilted_prox(&self, kernel: &dyn Kernel, _gamma: f64, tilt: &Vector) -> Result<Vec<Vector>> {
        let vals: Vec<f64> = self
            .points
            .iter()
            .map(|p| (kernel.value(p) - tilt.dot(p)).to_f64())
            .collect();
        let best = vals.iter().cloned().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(Error::Prox("no finite candidate in the point set".into()));
        }
        let tol = TIE_TOL * best.abs().max(1.0);
        Ok(self
            .points
            .iter()
            .zip(&vals)
            .filter(|(_, v)| **v <= best + tol)
            .map(|(p, _)| p.clone())
            .collect())
    }
}
