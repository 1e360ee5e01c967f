//! Sampling-based verification of oracle invariants.
//!
//! Moduli and kernels are user-asserted; these checks catch sign errors and
//! inconsistent oracles, they do not prove anything.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ext::Ext;
use crate::kernel::{bregman_distance, Kernel, Vector};
use crate::problem::nonsmooth::{subproblem_value, Nonsmooth};
use crate::problem::smooth::SmoothOracle;
use crate::problem::ProblemInstance;

/// Outcome of one invariant check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, failures: Vec<String>, total: usize) -> Check {
        let passed = failures.is_empty();
        let detail = if passed {
            format!("{total} samples")
        } else {
            format!("{} of {total} samples failed; first: {}", failures.len(), failures[0])
        };
        Check { name: name.to_string(), passed, detail }
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(crate::Error::Verification(format!("{}: {}", self.name, self.detail)))
        }
    }
}

/// Uniform sampling in a centred box.
pub struct Sampler {
    rng: ChaCha8Rng,
    dim: usize,
    radius: f64,
}

impl Sampler {
    pub fn new(dim: usize, radius: f64, seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), dim, radius }
    }

    pub fn point(&mut self) -> Vector {
        let r = self.radius;
        Vector::from_fn(self.dim, |_, _| self.rng.gen_range(-r..=r))
    }

    pub fn scaled(&mut self, scale: f64) -> Vector {
        Vector::from_fn(self.dim, |_, _| self.rng.gen_range(-scale..=scale))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }
}

fn midpoint_violation(psi: &dyn Fn(&Vector) -> f64, x: &Vector, y: &Vector) -> Option<String> {
    let m = (x + y) * 0.5;
    let (a, b, c) = (psi(x), psi(y), psi(&m));
    let tol = 1e-9 * (1.0 + a.abs() + b.abs());
    if c > 0.5 * (a + b) + tol {
        Some(format!("midpoint excess {:.3e} at x={} y={}", c - 0.5 * (a + b), x.transpose(), y.transpose()))
    } else {
        None
    }
}

/// Mirror round trip, midpoint convexity, and the optional strong-convexity
/// and gradient-Lipschitz moduli.
pub fn verify_kernel(k: &dyn Kernel, dim: usize, radius: f64, samples: usize, seed: u64) -> Vec<Check> {
    let mut s = Sampler::new(dim, radius, seed);
    let mut round = Vec::new();
    let mut convex = Vec::new();
    let mut strong = Vec::new();
    let mut lips = Vec::new();
    let h = |x: &Vector| k.value(x).to_f64();
    for _ in 0..samples {
        let x = s.point();
        let y = s.point();
        if !(k.in_domain(&x) && k.in_domain(&y)) {
            continue;
        }
        match k.inverse_gradient(&k.gradient(&x)) {
            Ok(back) if (&back - &x).norm() <= 1e-9 * (1.0 + x.norm()) => {}
            Ok(back) => round.push(format!("round trip error {:.3e}", (&back - &x).norm())),
            Err(e) => round.push(e.to_string()),
        }
        if let Some(msg) = midpoint_violation(&h, &x, &y) {
            convex.push(msg);
        }
        let d = bregman_distance(k, &x, &y).to_f64();
        let dist2 = (&x - &y).norm_squared();
        if let Some(sh) = k.strong_convexity() {
            if d < 0.5 * sh * dist2 - 1e-9 * (1.0 + d.abs()) {
                strong.push(format!("D={d:.6e} < sigma/2 |x-y|^2={:.6e}", 0.5 * sh * dist2));
            }
        }
        if let Some(lh) = k.grad_lipschitz() {
            let lhs = (k.gradient(&x) - k.gradient(&y)).norm();
            if lhs > lh * dist2.sqrt() + 1e-9 * (1.0 + lhs) {
                lips.push(format!("gradient difference {lhs:.6e} exceeds {:.6e}", lh * dist2.sqrt()));
            }
        }
    }
    let mut out = vec![
        Check::new("kernel.inverse_gradient", round, samples),
        Check::new("kernel.midpoint_convexity", convex, samples),
    ];
    if k.strong_convexity().is_some() {
        out.push(Check::new("kernel.strong_convexity", strong, samples));
    }
    if k.grad_lipschitz().is_some() {
        out.push(Check::new("kernel.grad_lipschitz", lips, samples));
    }
    out
}

/// Central-difference gradient check and midpoint convexity of
/// `f - sigma_f h` and `-f - sigma_minus_f h`.
pub fn verify_smooth(f: &SmoothOracle, k: &dyn Kernel, dim: usize, radius: f64, samples: usize, seed: u64) -> Vec<Check> {
    let mut s = Sampler::new(dim, radius, seed);
    let mut grad = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let h = |x: &Vector| k.value(x).to_f64();
    let psi_lo = |x: &Vector| f.value(x) - f.sigma_f * h(x);
    let psi_hi = |x: &Vector| -f.value(x) - f.sigma_minus_f * h(x);
    for _ in 0..samples {
        let x = s.point();
        let y = s.point();
        let g = f.gradient(&x);
        let fd = Vector::from_fn(dim, |i, _| {
            let step = 1e-6 * x[i].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += step;
            xm[i] -= step;
            (f.value(&xp) - f.value(&xm)) / (2.0 * step)
        });
        let err = (&fd - &g).norm();
        if err > 1e-6 * g.norm().max(1.0) {
            grad.push(format!("gradient mismatch {err:.3e} at {}", x.transpose()));
        }
        if let Some(m) = midpoint_violation(&psi_lo, &x, &y) {
            lower.push(m);
        }
        if let Some(m) = midpoint_violation(&psi_hi, &x, &y) {
            upper.push(m);
        }
    }
    let affine = if f.relative_smoothness() > 0.0 { vec![] } else { vec!["both moduli are zero".to_string()] };
    vec![
        Check::new("smooth.gradient_fd", grad, samples),
        Check::new("smooth.sigma_f", lower, samples),
        Check::new("smooth.sigma_minus_f", upper, samples),
        Check::new("smooth.not_affine", affine, 1),
    ]
}

/// Every returned minimizer beats random probes and local perturbations.
pub fn verify_prox(
    g: &dyn Nonsmooth,
    k: &dyn Kernel,
    gamma: f64,
    tilt: &Vector,
    probes: usize,
    radius: f64,
    seed: u64,
) -> Check {
    let dim = tilt.len();
    let mut s = Sampler::new(dim, radius, seed);
    let mut fails = Vec::new();
    match g.tilted_prox(k, gamma, tilt) {
        Err(e) => fails.push(e.to_string()),
        Ok(ws) => {
            for w in &ws {
                if !k.in_domain(w) {
                    fails.push(format!("minimizer {} outside the kernel domain", w.transpose()));
                }
                let vw = subproblem_value(g, k, gamma, tilt, w);
                for i in 0..probes {
                    let z = if i % 2 == 0 { s.point() } else { w + s.scaled(1e-3) };
                    let vz = subproblem_value(g, k, gamma, tilt, &z);
                    let tol = 1e-10 * (1.0 + vw.to_f64().abs());
                    if !vw.le_with_tol(vz, tol) {
                        fails.push(format!("probe {} beats minimizer {} ({} < {})", z.transpose(), w.transpose(), vz, vw));
                        break;
                    }
                }
            }
        }
    }
    Check::new("prox.optimality", fails, probes)
}

/// Sampled `phi` never drops below the declared optimum.
pub fn verify_known_optimum(p: &ProblemInstance, samples: usize, seed: u64) -> Check {
    let mut fails = Vec::new();
    if let Some(opt) = p.known_optimum {
        let mut s = Sampler::new(p.dimension, p.sample_radius, seed);
        for _ in 0..samples {
            let x = s.point();
            if let Ext::Finite(v) = p.phi(&x) {
                if v < opt - 1e-9 * (1.0 + opt.abs()) {
                    fails.push(format!("phi({}) = {v} < {opt}", x.transpose()));
                }
            }
        }
        if let Some(xs) = &p.known_minimizer {
            let v = p.phi(xs).to_f64();
            if (v - opt).abs() > 1e-9 * (1.0 + opt.abs()) {
                fails.push(format!("phi(known minimizer) = {v} != {opt}"));
            }
        }
    }
    Check::new("problem.known_optimum", fails, samples)
}

/// Kernel, smooth-term, prox and optimum checks for a whole instance.
pub fn verify_instance(p: &ProblemInstance, samples: usize, seed: u64) -> Vec<Check> {
    let k = p.kernel.as_ref();
    let mut out = verify_kernel(k, p.dimension, p.sample_radius, samples, seed);
    out.extend(verify_smooth(&p.f, k, p.dimension, p.sample_radius, samples, seed.wrapping_add(1)));
    let threshold = crate::problem::prox_threshold(p.f.sigma_minus_f);
    let gamma = if threshold.is_finite() { 0.5 * threshold } else { 1.0 };
    let mut s = Sampler::new(p.dimension, p.sample_radius, seed.wrapping_add(2));
    let mut prox_fails = Vec::new();
    let tilts = 5;
    for i in 0..tilts {
        let tilt = k.gradient(&s.point());
        let c = verify_prox(p.g.as_ref(), k, gamma, &tilt, samples / tilts + 1, p.sample_radius, seed.wrapping_add(10 + i as u64));
        if !c.passed {
            prox_fails.push(c.detail);
        }
    }
    out.push(Check::new("prox.optimality", prox_fails, tilts));
    out.push(verify_known_optimum(p, samples, seed.wrapping_add(3)));
    out
}
