//! Composite problems `phi = f + g` paired with a kernel.

pub mod instances;
pub mod nonsmooth;
pub mod smooth;
pub mod verify;

use std::sync::Arc;

use crate::ext::Ext;
use crate::kernel::{Kernel, Vector};

pub use nonsmooth::Nonsmooth;
pub use smooth::{SmoothFunction, SmoothOracle};

/// Convexity class of `f`, read off its moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureClass {
    Convex,
    Concave,
    Neither,
}

/// A problem instance. Immutable once built; cheap to clone.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    /// Constructor parameters, echoed into run manifests.
    pub params: serde_json::Value,
    pub f: SmoothOracle,
    pub g: Arc<dyn Nonsmooth>,
    pub kernel: Arc<dyn Kernel>,
    pub dimension: usize,
    pub known_optimum: Option<f64>,
    pub known_minimizer: Option<Vector>,
    pub level_bounded: bool,
    /// Half-width of the centred box used for sampling checks and random
    /// starting points.
    pub sample_radius: f64,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("kernel", &self.kernel.name())
            .field("g", &self.g.name())
            .field("dimension", &self.dimension)
            .field("sigma_f", &self.f.sigma_f)
            .field("sigma_minus_f", &self.f.sigma_minus_f)
            .finish()
    }
}

impl ProblemInstance {
    pub fn curvature(&self) -> CurvatureClass {
        if self.f.sigma_f >= 0.0 {
            CurvatureClass::Convex
        } else if self.f.sigma_minus_f >= 0.0 {
            CurvatureClass::Concave
        } else {
            CurvatureClass::Neither
        }
    }

    pub fn phi(&self, x: &Vector) -> Ext {
        phi(self, x)
    }
}

/// `f(x) + g(x)` with extended-real addition.
pub fn phi(p: &ProblemInstance, x: &Vector) -> Ext {
    Ext::from_f64(p.f.value(x)) + p.g.value(x)
}

/// `1 / [sigma_minus_f]_-`, infinite when `sigma_minus_f >= 0`.
pub fn prox_threshold(sigma_minus_f: f64) -> f64 {
    let neg = (-sigma_minus_f).max(0.0);
    if neg == 0.0 {
        f64::INFINITY
    } else {
        1.0 / neg
    }
}

/// Whether `gamma` lies strictly below the prox-boundedness threshold.
pub fn prox_threshold_check(p: &ProblemInstance, gamma: f64) -> bool {
    gamma > 0.0 && gamma < prox_threshold(p.f.sigma_minus_f)
}
