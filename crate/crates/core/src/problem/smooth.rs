//! Smooth terms `f`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::kernel::{GeneralizedReference, Vector};

/// Value and gradient oracle for the smooth term.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
}

/// The smooth term together with its relative weak-convexity moduli with
/// respect to the paired kernel: `f - sigma_f h` and `-f - sigma_minus_f h`
/// are convex.
#[derive(Clone)]
pub struct SmoothOracle {
    pub func: Arc<dyn SmoothFunction>,
    pub sigma_f: f64,
    pub sigma_minus_f: f64,
    /// Lipschitz modulus of `grad f` in the Euclidean sense, when known.
    pub lipschitz: Option<f64>,
}

impl SmoothOracle {
    pub fn new(func: Arc<dyn SmoothFunction>, sigma_f: f64, sigma_minus_f: f64) -> Self {
        SmoothOracle { func, sigma_f, sigma_minus_f, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.func.value(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.func.gradient(x)
    }

    /// `max(|sigma_f|, |sigma_minus_f|)`.
    pub fn relative_smoothness(&self) -> f64 {
        self.sigma_f.abs().max(self.sigma_minus_f.abs())
    }
}

impl GeneralizedReference for SmoothOracle {
    fn value(&self, x: &Vector) -> f64 {
        self.func.value(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.func.gradient(x)
    }
}

/// `1/2 x'Qx + q'x + c0` with symmetric `Q`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub q_mat: DMatrix<f64>,
    pub q_vec: Vector,
    pub c0: f64,
}

impl Quadratic {
    pub fn new(q_mat: DMatrix<f64>, q_vec: Vector, c0: f64) -> Self {
        let q_mat = (&q_mat + q_mat.transpose()) * 0.5;
        Quadratic { q_mat, q_vec, c0 }
    }

    /// `1/2 |Ax - b|^2`.
    pub fn least_squares(a: &DMatrix<f64>, b: &Vector) -> Self {
        let ata = a.transpose() * a;
        let atb = a.transpose() * b;
        Quadratic::new(ata, -atb, 0.5 * b.norm_squared())
    }

    /// Smallest and largest eigenvalue of `Q`.
    pub fn eigen_range(&self) -> (f64, f64) {
        eigen_range(&self.q_mat)
    }
}

pub(crate) fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

impl SmoothFunction for Quadratic {
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q_vec.dot(x) + self.c0
    }
    fn gradient(&self, x: &Vector) -> Vector {
        &self.q_mat * x + &self.q_vec
    }
}

/// Quartic phase-retrieval loss `1/4 sum_i (<a_i, x>^2 - b_i)^2`.
#[derive(Debug, Clone)]
pub struct PhaseRetrieval {
    pub a: Vec<Vector>,
    pub b: Vec<f64>,
}

impl PhaseRetrieval {
    /// Moduli relative to `1/4 |x|^4 + 1/2 |x|^2`, from
    /// `hess h = (1 + |x|^2) I + 2 x x' >= (1 + |x|^2) I` and
    /// `hess f = sum (3 <a,x>^2 - b) a a'`. Below, `hess f >= -sum b+ a a'`
    /// gives `sigma_f = -lmax(sum b+ a a')`. Above, `<a,x>^2 <= |a|^2 |x|^2`
    /// gives `hess f <= (3 |x|^2 lmax(sum |a|^2 a a') + lmax(sum b- a a')) I`,
    /// so `sigma_minus_f = -max(3 lmax(sum |a|^2 a a'), lmax(sum b- a a'))`.
    /// In one dimension `hess h = 1 + 3x^2` and the factor 3 drops.
    pub fn relative_moduli(&self) -> (f64, f64) {
        let n = self.a.first().map_or(1, |a| a.len());
        let mut pos = DMatrix::zeros(n, n);
        let mut neg = DMatrix::zeros(n, n);
        let mut quart = DMatrix::zeros(n, n);
        for (a, &b) in self.a.iter().zip(&self.b) {
            let aa = a * a.transpose();
            pos += &aa * b.max(0.0);
            neg += &aa * (-b).max(0.0);
            quart += &aa * a.norm_squared();
        }
        let lmax = |m: DMatrix<f64>| m.symmetric_eigenvalues().max().max(0.0);
        let (pos, neg, quart) = (lmax(pos), lmax(neg), lmax(quart));
        let upper = if n == 1 { quart.max(neg) } else { (3.0 * quart).max(neg) };
        (-pos, -upper)
    }
}

impl SmoothFunction for PhaseRetrieval {
    fn value(&self, x: &Vector) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| {
                let r = a.dot(x).powi(2) - b;
                0.25 * r * r
            })
            .sum()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(x.len());
        for (a, b) in self.a.iter().zip(&self.b) {
            let s = a.dot(x);
            g += a * ((s * s - b) * s);
        }
        g
    }
}

/// `1/2 x'Qx - b'x + sum_i log cosh(x_i)`: strongly convex when `Q > 0`,
/// with Hessian between `Q` and `Q + I`.
#[derive(Debug, Clone)]
pub struct LogCoshQuadratic {
    pub q_mat: DMatrix<f64>,
    pub b: Vector,
}

pub(crate) fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl SmoothFunction for LogCoshQuadratic {
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) - self.b.dot(x) + x.iter().map(|&t| log_cosh(t)).sum::<f64>()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        &self.q_mat * x - &self.b + x.map(f64::tanh)
    }
}

impl LogCoshQuadratic {
    pub fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        let mut h = self.q_mat.clone();
        for i in 0..x.len() {
            let s = 1.0 / x[i].cosh();
            h[(i, i)] += s * s;
        }
        h
    }

    /// Newton's method from the origin; the objective is strongly convex.
    pub fn minimizer(&self) -> Vector {
        let mut x = Vector::zeros(self.b.len());
        for _ in 0..100 {
            let g = self.gradient(&x);
            if g.norm() < 1e-15 {
                break;
            }
            let step = self.hessian(&x).lu().solve(&g).unwrap_or_else(|| g.clone());
            x -= step;
        }
        x
    }
}
