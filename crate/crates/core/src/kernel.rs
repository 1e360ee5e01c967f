//! Legendre kernels and Bregman distances.
//!
//! A kernel `h` supplies its value, gradient and the inverse of the mirror map
//! `grad h`. Both built-in kernels have full domain. User kernels implement
//! [`Kernel`] directly or go through [`CustomKernel`].

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::scalar::{solve_increasing, ROOT_TOL};

/// Points and dual vectors.
pub type Vector = DVector<f64>;

/// Oracle for a Legendre kernel.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, x: &Vector) -> Ext;

    /// `grad h(x)`; only meaningful for `x` in the interior of the domain.
    fn gradient(&self, x: &Vector) -> Vector;

    /// `(grad h)^{-1}(y)`.
    fn inverse_gradient(&self, y: &Vector) -> Result<Vector>;

    fn strong_convexity(&self) -> Option<f64> {
        None
    }

    fn grad_lipschitz(&self) -> Option<f64> {
        None
    }

    /// Membership in the interior of `dom h`.
    fn in_domain(&self, _x: &Vector) -> bool {
        true
    }

    /// For radial kernels `h(x) = k(|x|)`, the factor `m(r) = k'(r) / r` with
    /// `grad h(x) = m(|x|) x`. Nonradial kernels return `None`.
    fn radial_scale(&self, _r: f64) -> Option<f64> {
        None
    }

    /// Closed-form Bregman distance when one is available with better
    /// rounding behaviour than the three-term definition.
    fn divergence(&self, _x: &Vector, _y: &Vector) -> Option<f64> {
        None
    }
}

/// `h = 1/2 |x|^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Kernel for Euclidean {
    fn name(&self) -> &str {
        "euclidean"
    }

    fn value(&self, x: &Vector) -> Ext {
        Ext::from_f64(0.5 * x.norm_squared())
    }

    fn gradient(&self, x: &Vector) -> Vector {
        x.clone()
    }

    fn inverse_gradient(&self, y: &Vector) -> Result<Vector> {
        Ok(y.clone())
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(1.0)
    }

    fn grad_lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }

    fn radial_scale(&self, _r: f64) -> Option<f64> {
        Some(1.0)
    }

    fn divergence(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(0.5 * (x - y).norm_squared())
    }
}

/// `h = 1/4 |x|^4 + 1/2 |x|^2`: 1-strongly convex, gradient not globally
/// Lipschitz. The mirror inverse solves the radial equation `r^3 + r = |y|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quartic;

impl Quartic {
    /// Radius `r >= 0` with `r^3 + r = s`.
    pub fn radius_for(s: f64) -> Result<f64> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::RootFind(format!("invalid dual radius {s}")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        solve_increasing(|r| (r * r * r + r, 3.0 * r * r + 1.0), s, 0.0, s, ROOT_TOL)
    }
}

impl Kernel for Quartic {
    fn name(&self) -> &str {
        "quartic"
    }

    fn value(&self, x: &Vector) -> Ext {
        let s = x.norm_squared();
        Ext::from_f64(0.25 * s * s + 0.5 * s)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        x * (x.norm_squared() + 1.0)
    }

    fn inverse_gradient(&self, y: &Vector) -> Result<Vector> {
        let r = Quartic::radius_for(y.norm())?;
        Ok(y / (1.0 + r * r))
    }

    fn strong_convexity(&self) -> Option<f64> {
        Some(1.0)
    }

    fn radial_scale(&self, r: f64) -> Option<f64> {
        Some(1.0 + r * r)
    }

    fn divergence(&self, x: &Vector, y: &Vector) -> Option<f64> {
        // quartic part: 1/2 |y|^2 |d|^2 + (<y, d> + 1/2 |d|^2)^2 with d = x - y
        let d = x - y;
        let e = d.norm_squared();
        let u = y.dot(&d) + 0.5 * e;
        Some(0.5 * y.norm_squared() * e + u * u + 0.5 * e)
    }
}

type VecFn<T> = Arc<dyn Fn(&Vector) -> T + Send + Sync>;

/// Kernel assembled from closures.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub value: VecFn<Ext>,
    pub gradient: VecFn<Vector>,
    pub inverse_gradient: VecFn<Result<Vector>>,
    pub domain_probe: VecFn<bool>,
    pub strong_convexity: Option<f64>,
    pub grad_lipschitz: Option<f64>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("strong_convexity", &self.strong_convexity)
            .field("grad_lipschitz", &self.grad_lipschitz)
            .finish_non_exhaustive()
    }
}

impl Kernel for CustomKernel {
    fn name(&self) -> &str {
        &self.name
    }
    fn value(&self, x: &Vector) -> Ext {
        (self.value)(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }
    fn inverse_gradient(&self, y: &Vector) -> Result<Vector> {
        (self.inverse_gradient)(y)
    }
    fn strong_convexity(&self) -> Option<f64> {
        self.strong_convexity
    }
    fn grad_lipschitz(&self) -> Option<f64> {
        self.grad_lipschitz
    }
    fn in_domain(&self, x: &Vector) -> bool {
        (self.domain_probe)(x)
    }
}

/// Bregman distance `h(x) - h(y) - <grad h(y), x - y>`.
///
/// `+inf` when `y` is outside the domain interior, and also when `h(x)` is.
/// Small negative rounding residue is clamped to zero.
pub fn bregman_distance(k: &dyn Kernel, x: &Vector, y: &Vector) -> Ext {
    if x.len() != y.len() {
        return Ext::DomainError;
    }
    if !k.in_domain(y) {
        return Ext::PosInf;
    }
    let hy = match k.value(y) {
        Ext::Finite(v) => v,
        _ => return Ext::DomainError,
    };
    let hx = k.value(x);
    if let (Ext::Finite(_), Some(d)) = (hx, k.divergence(x, y)) {
        return Ext::from_f64(d.max(0.0));
    }
    let lin = k.gradient(y).dot(&(x - y));
    match hx - hy - lin {
        Ext::Finite(d) => Ext::Finite(d.max(0.0)),
        other => other,
    }
}

/// `(grad h)^{-1}(grad h(x) + dual_shift)`.
pub fn mirror_step(k: &dyn Kernel, x: &Vector, dual_shift: &Vector) -> Result<Vector> {
    if !k.in_domain(x) {
        return Err(Error::DomainExit(format!("mirror step from {}", x.transpose())));
    }
    let out = k.inverse_gradient(&(k.gradient(x) + dual_shift))?;
    if !k.in_domain(&out) || out.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainExit(format!("mirror step produced {}", out.transpose())));
    }
    Ok(out)
}

/// A differentiable, possibly nonconvex, reference function `psi` whose
/// Bregman "distance" may take either sign.
pub trait GeneralizedReference {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
}

/// `psi(x) - psi(y) - <grad psi(y), x - y>`, any sign.
pub fn generalized_bregman(r: &dyn GeneralizedReference, x: &Vector, y: &Vector) -> f64 {
    r.value(x) - r.value(y) - r.gradient(y).dot(&(x - y))
}

/// Adapter viewing a kernel as a finite-valued reference on its domain.
pub struct KernelReference<'a>(pub &'a dyn Kernel);

impl GeneralizedReference for KernelReference<'_> {
    fn value(&self, x: &Vector) -> f64 {
        self.0.value(x).to_f64()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.0.gradient(x)
    }
}

/// `1/2 |x|^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfSquaredNorm;

impl GeneralizedReference for HalfSquaredNorm {
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.norm_squared()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        x.clone()
    }
}

/// `sum_i c_i psi_i`.
#[derive(Default)]
pub struct LinearCombination<'a> {
    terms: Vec<(f64, &'a dyn GeneralizedReference)>,
}

impl<'a> LinearCombination<'a> {
    pub fn new() -> Self {
        LinearCombination { terms: Vec::new() }
    }

    pub fn term(mut self, coef: f64, r: &'a dyn GeneralizedReference) -> Self {
        self.terms.push((coef, r));
        self
    }
}

impl GeneralizedReference for LinearCombination<'_> {
    fn value(&self, x: &Vector) -> f64 {
        self.terms.iter().map(|(c, r)| c * r.value(x)).sum()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(x.len());
        for (c, r) in &self.terms {
            g += r.gradient(x) * *c;
        }
        g
    }
}

/// Reference given by closures.
pub struct FnReference<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> GeneralizedReference for FnReference<V, G>
where
    V: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
        Vector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
    }

    #[test]
    fn euclidean_sharp_pair() {
        assert_eq!(bregman_distance(&Euclidean, &v(&[1.0]), &v(&[-1.0])), Ext::Finite(2.0));
    }

    #[test]
    fn identical_points() {
        for k in [&Euclidean as &dyn Kernel, &Quartic] {
            let x = v(&[0.3, -1.7]);
            assert_eq!(bregman_distance(k, &x, &x), Ext::Finite(0.0));
        }
    }

    #[test]
    fn quartic_unit_step() {
        // h(1) - h(0) - <grad h(0), 1> = 1/4 + 1/2
        let d = bregman_distance(&Quartic, &v(&[1.0]), &v(&[0.0])).finite().unwrap();
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn quartic_closed_form_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x = random_vec(&mut rng, 3, 2.0);
            let y = random_vec(&mut rng, 3, 2.0);
            let direct = Quartic.value(&x).to_f64() - Quartic.value(&y).to_f64() - Quartic.gradient(&y).dot(&(&x - &y));
            let closed = Quartic.divergence(&x, &y).unwrap();
            assert!((direct - closed).abs() <= 1e-11 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn concave_reference_goes_negative() {
        let r = FnReference { value: |x: &Vector| -0.5 * x.norm_squared(), gradient: |x: &Vector| -x.clone() };
        assert!((generalized_bregman(&r, &v(&[1.0]), &v(&[0.0])) + 0.5).abs() < 1e-15);
        assert_eq!(generalized_bregman(&r, &v(&[0.4]), &v(&[0.4])), 0.0);
    }

    #[test]
    fn mirror_steps() {
        assert_eq!(mirror_step(&Euclidean, &v(&[0.5]), &v(&[0.25])).unwrap(), v(&[0.75]));
        let x = v(&[0.7, -0.2]);
        let same = mirror_step(&Quartic, &x, &Vector::zeros(2)).unwrap();
        assert!((same - &x).norm() < 1e-12);
        // grad h(1) = 2, shift -2: root of t^3 + t = 0
        let z = mirror_step(&Quartic, &v(&[1.0]), &v(&[-2.0])).unwrap();
        assert!(z[0].abs() < 1e-15);
    }

    #[test]
    fn out_of_domain_base_is_infinite() {
        let k = CustomKernel {
            name: "neg-entropy".into(),
            value: Arc::new(|x: &Vector| {
                if x.iter().all(|&t| t > 0.0) {
                    Ext::Finite(x.iter().map(|t| t * t.ln()).sum())
                } else {
                    Ext::PosInf
                }
            }),
            gradient: Arc::new(|x: &Vector| x.map(|t| t.ln() + 1.0)),
            inverse_gradient: Arc::new(|y: &Vector| Ok(y.map(|t| (t - 1.0).exp()))),
            domain_probe: Arc::new(|x: &Vector| x.iter().all(|&t| t > 0.0)),
            strong_convexity: None,
            grad_lipschitz: None,
        };
        assert_eq!(bregman_distance(&k, &v(&[1.0]), &v(&[-1.0])), Ext::PosInf);
        assert!(mirror_step(&k, &v(&[-1.0]), &v(&[0.0])).is_err());
        let y = mirror_step(&k, &v(&[2.0]), &v(&[0.5])).unwrap();
        assert!((y[0] - 2.0 * 0.5f64.exp()).abs() < 1e-12);
    }
}
