//! Built-in problem instances, selectable by name.
//!
//! Every constructor verifies its oracles by sampling before returning.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::nonsmooth::{BoxIndicator, FiniteSet, L1Box, Nonsmooth, Zero, L1};
use super::smooth::{eigen_range, LogCoshQuadratic, PhaseRetrieval, Quadratic, SmoothOracle};
use super::verify::verify_instance;
use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::kernel::{Euclidean, Kernel, Quartic, Vector};

/// Samples drawn by constructor verification.
pub const VERIFY_SAMPLES: usize = 200;
const VERIFY_SEED: u64 = 0x5eed;

/// Catalog entry for `list-instances`.
#[derive(Debug, Clone, Serialize)]
pub struct InstanceInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub defaults: serde_json::Value,
}

pub const NAMES: &[&str] = &[
    "counterexample",
    "nonconvex-qp-l1",
    "quartic1d",
    "phase-retrieval",
    "convex-lasso",
    "concave-box",
    "convex-quadratic",
    "logcosh-toy",
];

pub fn catalog() -> Vec<InstanceInfo> {
    let entry = |name, summary, defaults: serde_json::Value| InstanceInfo { name, summary, defaults };
    vec![
        entry(
            "counterexample",
            "f = L/2 x^2, g = indicator of {-1, 1}, Euclidean kernel",
            to_value(&CounterexampleParams::default()),
        ),
        entry(
            "nonconvex-qp-l1",
            "indefinite quadratic + l1 on a box",
            to_value(&QpParams::default()),
        ),
        entry("quartic1d", "f = 1/4 (x^2 - 1)^2 with the quartic kernel", serde_json::json!({})),
        entry(
            "phase-retrieval",
            "1/4 sum (<a_i, x>^2 - b_i)^2 with the quartic kernel",
            to_value(&PhaseRetrievalParams::default()),
        ),
        entry("convex-lasso", "1/2 |Ax - b|^2 + lambda |x|_1", to_value(&LassoParams::default())),
        entry(
            "concave-box",
            "-mu/2 |x|^2 + q'x on [-1, 1]^n",
            to_value(&ConcaveBoxParams::default()),
        ),
        entry(
            "convex-quadratic",
            "strongly convex quadratic, g = 0",
            to_value(&ConvexQuadraticParams::default()),
        ),
        entry(
            "logcosh-toy",
            "1/2 x'Qx - b'x + sum log cosh x_i, g = 0",
            to_value(&LogCoshParams::default()),
        ),
    ]
}

fn to_value<T: Serialize>(t: &T) -> serde_json::Value {
    serde_json::to_value(t).expect("parameter structs serialize")
}

fn parse<T: DeserializeOwned>(name: &str, params: &serde_json::Value) -> Result<T> {
    let v = if params.is_null() { serde_json::json!({}) } else { params.clone() };
    serde_json::from_value(v).map_err(|e| Error::Config(format!("instance_params for '{name}': {e}")))
}

/// Build a named instance from JSON parameters (`null` or `{}` for defaults).
pub fn build(name: &str, params: &serde_json::Value) -> Result<ProblemInstance> {
    match name {
        "counterexample" => counterexample_with(parse(name, params)?),
        "nonconvex-qp-l1" => nonconvex_qp_l1(parse(name, params)?),
        "quartic1d" => {
            let _: Empty = parse(name, params)?;
            quartic1d()
        }
        "phase-retrieval" => phase_retrieval(parse(name, params)?),
        "convex-lasso" => convex_lasso(parse(name, params)?),
        "concave-box" => concave_box(parse(name, params)?),
        "convex-quadratic" => convex_quadratic(parse(name, params)?),
        "logcosh-toy" => logcosh_toy(parse(name, params)?),
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}

/// Kernel by name.
pub fn kernel_by_name(name: &str) -> Result<Arc<dyn Kernel>> {
    match name {
        "euclidean" => Ok(Arc::new(Euclidean)),
        "quartic" => Ok(Arc::new(Quartic)),
        other => Err(Error::Config(format!("unknown kernel '{other}' (expected euclidean or quartic)"))),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Empty {}

fn finish(p: ProblemInstance) -> Result<ProblemInstance> {
    if p.f.relative_smoothness() == 0.0 {
        return Err(Error::AffineSmooth);
    }
    for check in verify_instance(&p, VERIFY_SAMPLES, VERIFY_SEED) {
        check.into_result()?;
    }
    Ok(p)
}

/// Relative moduli of a quadratic with Hessian eigenvalues in `[lo, hi]`.
///
/// Euclidean: `(lo, -hi)`. Quartic: `hess h >= I` is unbounded above, so a
/// positive lower modulus and a negative upper one are unavailable and clip
/// to zero.
fn quadratic_moduli(kernel: &str, lo: f64, hi: f64) -> (f64, f64) {
    match kernel {
        "quartic" => (lo.min(0.0), -hi.max(0.0)),
        _ => (lo, -hi),
    }
}

fn quadratic_kernel(name: &str) -> Result<Arc<dyn Kernel>> {
    kernel_by_name(name)
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleParams {
    pub l: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        CounterexampleParams { l: 1.0 }
    }
}

/// `f = L/2 x^2`, `g` the indicator of `{-1, 1}`, Euclidean kernel.
/// Moduli `(L, -L)`, optimum `L/2` at both points.
pub fn counterexample(l: f64) -> Result<ProblemInstance> {
    counterexample_with(CounterexampleParams { l })
}

fn counterexample_with(params: CounterexampleParams) -> Result<ProblemInstance> {
    let l = params.l;
    if !(l > 0.0) {
        return Err(Error::Config("counterexample needs l > 0".into()));
    }
    let f = Quadratic::new(DMatrix::from_element(1, 1, l), Vector::zeros(1), 0.0);
    finish(ProblemInstance {
        name: "counterexample".into(),
        params: to_value(&params),
        f: SmoothOracle::new(Arc::new(f), l, -l).with_lipschitz(l),
        g: Arc::new(FiniteSet::plus_minus_one()),
        kernel: Arc::new(Euclidean),
        dimension: 1,
        known_optimum: Some(0.5 * l),
        known_minimizer: Some(v(&[1.0])),
        level_bounded: true,
        sample_radius: 2.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpParams {
    pub dim: usize,
    pub lambda: f64,
    pub radius: f64,
    pub kernel: String,
}

impl Default for QpParams {
    fn default() -> Self {
        QpParams { dim: 2, lambda: 0.1, radius: 2.0, kernel: "euclidean".into() }
    }
}

/// Indefinite quadratic plus `lambda |x|_1` restricted to `[-radius, radius]^n`.
///
/// One dimension: `Q = -1`, `q = 0.3` (concave `f`). Two dimensions:
/// `Q = [[1, 0.5], [0.5, -1]]`, `q = (0.2, -0.1)`.
pub fn nonconvex_qp_l1(params: QpParams) -> Result<ProblemInstance> {
    let (q_mat, q_vec) = match params.dim {
        1 => (DMatrix::from_element(1, 1, -1.0), v(&[0.3])),
        2 => (DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -1.0]), v(&[0.2, -0.1])),
        d => return Err(Error::Config(format!("nonconvex-qp-l1 supports dim 1 or 2, got {d}"))),
    };
    let kernel = quadratic_kernel(&params.kernel)?;
    let (lo, hi) = eigen_range(&q_mat);
    let (sf, smf) = quadratic_moduli(kernel.name(), lo, hi);
    let lf = lo.abs().max(hi.abs());
    let f = Quadratic::new(q_mat, q_vec, 0.0);
    let (known_optimum, known_minimizer) = if params.dim == 1 {
        // concave plus l1 on an interval: the minimum sits at an endpoint
        let r = params.radius;
        let at = |x: f64| -0.5 * x * x + 0.3 * x + params.lambda * x.abs();
        if at(-r) <= at(r) {
            (Some(at(-r)), Some(v(&[-r])))
        } else {
            (Some(at(r)), Some(v(&[r])))
        }
    } else {
        (None, None)
    };
    let g = L1Box { lambda: params.lambda, bounds: BoxIndicator::symmetric(params.dim, params.radius) };
    finish(ProblemInstance {
        name: "nonconvex-qp-l1".into(),
        params: to_value(&params),
        f: SmoothOracle::new(Arc::new(f), sf, smf).with_lipschitz(lf),
        g: Arc::new(g),
        kernel,
        dimension: params.dim,
        known_optimum,
        known_minimizer,
        level_bounded: true,
        sample_radius: params.radius * 1.25,
    })
}

/// `f = 1/4 (x^2 - 1)^2`, `g = 0`, quartic kernel. Moduli `(-1, -1)`:
/// `f'' = 3x^2 - 1` and `h'' = 3x^2 + 1`. Minimizers `+-1`, optimum 0.
pub fn quartic1d() -> Result<ProblemInstance> {
    let f = PhaseRetrieval { a: vec![v(&[1.0])], b: vec![1.0] };
    let (sf, smf) = f.relative_moduli();
    finish(ProblemInstance {
        name: "quartic1d".into(),
        params: serde_json::json!({}),
        f: SmoothOracle::new(Arc::new(f), sf, smf),
        g: Arc::new(Zero),
        kernel: Arc::new(Quartic),
        dimension: 1,
        known_optimum: Some(0.0),
        known_minimizer: Some(v(&[1.0])),
        level_bounded: true,
        sample_radius: 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseRetrievalG {
    Zero,
    Box,
    L1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseRetrievalParams {
    pub dim: usize,
    pub measurements: Option<usize>,
    pub g: PhaseRetrievalG,
    pub lambda: f64,
    pub radius: f64,
    pub seed: u64,
    /// Sensing design; defaults to `frame` up to two dimensions.
    pub design: Option<SensingDesign>,
}

impl Default for PhaseRetrievalParams {
    fn default() -> Self {
        PhaseRetrievalParams {
            dim: 2,
            measurements: None,
            g: PhaseRetrievalG::Zero,
            lambda: 0.05,
            radius: 1.5,
            seed: 7,
            design: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensingDesign {
    /// Seeded uniform entries.
    Random,
    /// Unit vectors at equally spaced angles in `[0, pi)` (at most 2-D).
    Frame,
}

/// Noiseless phase retrieval with sensing vectors scaled by `1/sqrt(m)`;
/// `m` defaults to `2n + 2`. The planted signal is `(1.5, -1)` in two
/// dimensions and seeded otherwise. The equiangular frame keeps the
/// problem well conditioned around the planted signal; random designs in
/// few measurements can be nearly degenerate.
pub fn phase_retrieval(params: PhaseRetrievalParams) -> Result<ProblemInstance> {
    let n = params.dim;
    if n == 0 {
        return Err(Error::Config("phase-retrieval needs dim >= 1".into()));
    }
    let m = params.measurements.unwrap_or(2 * n + 2);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let x_true = match n {
        1 => v(&[1.0]),
        2 => v(&[1.5, -1.0]),
        _ => Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
    };
    let scale = 1.0 / (m as f64).sqrt();
    let design = params.design.unwrap_or(if n <= 2 { SensingDesign::Frame } else { SensingDesign::Random });
    let a: Vec<Vector> = match (design, n) {
        (SensingDesign::Frame, 1) => (0..m).map(|_| v(&[scale])).collect(),
        (SensingDesign::Frame, 2) => (0..m)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / m as f64;
                v(&[scale * t.cos(), scale * t.sin()])
            })
            .collect(),
        (SensingDesign::Frame, _) => return Err(Error::Config("phase-retrieval frame design needs dim <= 2".into())),
        (SensingDesign::Random, _) => (0..m).map(|_| Vector::from_fn(n, |_, _| scale * rng.gen_range(-1.0..1.0))).collect(),
    };
    let b: Vec<f64> = a.iter().map(|ai| ai.dot(&x_true).powi(2)).collect();
    let f = PhaseRetrieval { a, b };
    let (sf, smf) = f.relative_moduli();
    let radius = params.radius.max(x_true.amax());
    let (g, known): (Arc<dyn Nonsmooth>, bool) = match params.g {
        PhaseRetrievalG::Zero => (Arc::new(Zero), true),
        PhaseRetrievalG::Box => (Arc::new(BoxIndicator::symmetric(n, radius)), true),
        PhaseRetrievalG::L1 => (Arc::new(L1 { lambda: params.lambda }), false),
    };
    finish(ProblemInstance {
        name: "phase-retrieval".into(),
        params: to_value(&PhaseRetrievalParams { measurements: Some(m), radius, design: Some(design), ..params }),
        f: SmoothOracle::new(Arc::new(f), sf, smf),
        g,
        kernel: Arc::new(Quartic),
        dimension: n,
        known_optimum: known.then_some(0.0),
        known_minimizer: known.then_some(x_true),
        level_bounded: true,
        sample_radius: 2.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoParams {
    pub dim: usize,
    pub lambda: f64,
    pub kernel: String,
}

impl Default for LassoParams {
    fn default() -> Self {
        LassoParams { dim: 2, lambda: 0.1, kernel: "euclidean".into() }
    }
}

/// `1/2 |Ax - b|^2 + lambda |x|_1`. One dimension: `A = 2`, `b = 1`, with
/// minimizer `soft(Ab, lambda) / A^2`. Two dimensions: a fixed 3x2 design.
pub fn convex_lasso(params: LassoParams) -> Result<ProblemInstance> {
    let (a, b) = match params.dim {
        1 => (DMatrix::from_element(1, 1, 2.0), v(&[1.0])),
        2 => (DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.3, 1.0, 0.5, -0.4]), v(&[1.0, -0.5, 0.3])),
        d => return Err(Error::Config(format!("convex-lasso supports dim 1 or 2, got {d}"))),
    };
    let kernel = quadratic_kernel(&params.kernel)?;
    let f = Quadratic::least_squares(&a, &b);
    let (lo, hi) = f.eigen_range();
    let (sf, smf) = quadratic_moduli(kernel.name(), lo, hi);
    let lam = params.lambda;
    let (known_optimum, known_minimizer) = if params.dim == 1 {
        let (a, b) = (2.0, 1.0);
        let ab: f64 = a * b;
        let x = ab.signum() * (ab.abs() - lam).max(0.0) / (a * a);
        (Some(0.5 * (a * x - b).powi(2) + lam * x.abs()), Some(v(&[x])))
    } else {
        (None, None)
    };
    let g: Arc<dyn Nonsmooth> = Arc::new(L1 { lambda: lam });
    finish(ProblemInstance {
        name: "convex-lasso".into(),
        params: to_value(&params),
        f: SmoothOracle::new(Arc::new(f), sf, smf).with_lipschitz(hi),
        g,
        kernel,
        dimension: params.dim,
        known_optimum,
        known_minimizer,
        level_bounded: lam > 0.0 || lo > 0.0,
        sample_radius: 2.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcaveBoxParams {
    pub dim: usize,
    pub mu: f64,
    pub kernel: String,
}

impl Default for ConcaveBoxParams {
    fn default() -> Self {
        ConcaveBoxParams { dim: 2, mu: 1.0, kernel: "euclidean".into() }
    }
}

/// `-mu/2 |x|^2 + q'x` on `[-1, 1]^n` with `q = (0.3, -0.2, 0.3, ...)`.
/// The concave objective is minimized at the vertex `-sign(q)`.
pub fn concave_box(params: ConcaveBoxParams) -> Result<ProblemInstance> {
    let n = params.dim;
    if n == 0 || !(params.mu > 0.0) {
        return Err(Error::Config("concave-box needs dim >= 1 and mu > 0".into()));
    }
    let kernel = quadratic_kernel(&params.kernel)?;
    let q = Vector::from_fn(n, |i, _| if i % 2 == 0 { 0.3 } else { -0.2 });
    let mu = params.mu;
    let (sf, smf) = quadratic_moduli(kernel.name(), -mu, -mu);
    let x_star = q.map(|t| -t.signum());
    let opt = -0.5 * mu * n as f64 - q.lp_norm(1);
    let f = Quadratic::new(DMatrix::from_diagonal_element(n, n, -mu), q, 0.0);
    finish(ProblemInstance {
        name: "concave-box".into(),
        params: to_value(&params),
        f: SmoothOracle::new(Arc::new(f), sf, smf).with_lipschitz(mu),
        g: Arc::new(BoxIndicator::symmetric(n, 1.0)),
        kernel,
        dimension: n,
        known_optimum: Some(opt),
        known_minimizer: Some(x_star),
        level_bounded: true,
        sample_radius: 1.25,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvexQuadraticParams {
    pub dim: usize,
    pub kernel: String,
}

impl Default for ConvexQuadraticParams {
    fn default() -> Self {
        ConvexQuadraticParams { dim: 2, kernel: "euclidean".into() }
    }
}

/// `1/2 x'Qx - b'x` with `g = 0`. One dimension: `Q = 2`, `b = 1`.
/// Two dimensions: `Q = [[2, 0.5], [0.5, 1]]`, `b = (1, 1)`.
pub fn convex_quadratic(params: ConvexQuadraticParams) -> Result<ProblemInstance> {
    let (q_mat, b) = match params.dim {
        1 => (DMatrix::from_element(1, 1, 2.0), v(&[1.0])),
        2 => (DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]), v(&[1.0, 1.0])),
        d => return Err(Error::Config(format!("convex-quadratic supports dim 1 or 2, got {d}"))),
    };
    let kernel = quadratic_kernel(&params.kernel)?;
    let x_star = q_mat.clone().lu().solve(&b).ok_or_else(|| Error::Config("singular Q".into()))?;
    let f = Quadratic::new(q_mat, -b, 0.0);
    let opt = crate::problem::smooth::SmoothFunction::value(&f, &x_star);
    let (lo, hi) = f.eigen_range();
    let (sf, smf) = quadratic_moduli(kernel.name(), lo, hi);
    finish(ProblemInstance {
        name: "convex-quadratic".into(),
        params: to_value(&params),
        f: SmoothOracle::new(Arc::new(f), sf, smf).with_lipschitz(hi),
        g: Arc::new(Zero),
        kernel,
        dimension: params.dim,
        known_optimum: Some(opt),
        known_minimizer: Some(x_star),
        level_bounded: true,
        sample_radius: 2.0,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogCoshParams {
    pub dim: usize,
}

impl Default for LogCoshParams {
    fn default() -> Self {
        LogCoshParams { dim: 2 }
    }
}

/// `1/2 x'Qx - b'x + sum log cosh x_i`, `g = 0`, Euclidean kernel.
/// Hessian between `Q` and `Q + I`, so the moduli are
/// `(lambda_min(Q), -(lambda_max(Q) + 1))`.
pub fn logcosh_toy(params: LogCoshParams) -> Result<ProblemInstance> {
    let (q_mat, b) = match params.dim {
        1 => (DMatrix::from_element(1, 1, 1.0), v(&[2.0])),
        2 => (DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 1.0]), v(&[2.0, -1.0])),
        d => return Err(Error::Config(format!("logcosh-toy supports dim 1 or 2, got {d}"))),
    };
    let (lo, hi) = eigen_range(&q_mat);
    let f = LogCoshQuadratic { q_mat, b };
    let x_star = f.minimizer();
    let opt = crate::problem::smooth::SmoothFunction::value(&f, &x_star);
    finish(ProblemInstance {
        name: "logcosh-toy".into(),
        params: to_value(&params),
        f: SmoothOracle::new(Arc::new(f), lo, -(hi + 1.0)).with_lipschitz(hi + 1.0),
        g: Arc::new(Zero),
        kernel: Arc::new(Euclidean),
        dimension: params.dim,
        known_optimum: Some(opt),
        known_minimizer: Some(x_star),
        level_bounded: true,
        sample_radius: 3.0,
    })
}
