//! Invariant suite for one instance and parameter set.

use serde::Serialize;

use crate::error::Result;
use crate::kernel::Vector;
use crate::planner::PlannedParams;
use crate::problem::verify::{verify_instance, Sampler};
use crate::problem::ProblemInstance;
use crate::solver::{run, Evaluator, SolverOptions, StopCriteria, CERT_SLACK};

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    /// Random starting pairs for the decrease checks.
    pub starts: usize,
    pub iterations: usize,
    /// Random points for the pointwise identities.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { starts: 10, iterations: 500, samples: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Failed, but the parameters carry no guarantee for this invariant.
    ExpectedFail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub instance: String,
    pub kernel: String,
    pub planned: PlannedParams,
    pub invariants: Vec<InvariantResult>,
    pub passed: bool,
}

impl CertifyReport {
    pub fn get(&self, name: &str) -> Option<&InvariantResult> {
        self.invariants.iter().find(|r| r.name == name)
    }
}

/// Tolerance for the two pointwise model identities.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Tolerance for `E(x, x-) <= phi(x)`.
pub const ENVELOPE_TOL: f64 = 1e-12;
/// Required tail sum of Bregman steps from step `iterations` on.
pub const TAIL_SUM_TOL: f64 = 1e-6;
/// Runs continue past `iterations` to estimate the infinite tail, up to
/// this multiple of `iterations` or until they settle at 1e-12.
pub const TAIL_HORIZON: usize = 200;

struct Tally {
    name: &'static str,
    worst: f64,
    failures: usize,
    total: usize,
    first: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, worst: f64::INFINITY, failures: 0, total: 0, first: None }
    }

    /// Record a signed margin; negative is a failure.
    fn add(&mut self, margin: f64, what: impl FnOnce() -> String) {
        self.total += 1;
        self.worst = self.worst.min(margin);
        if !(margin >= 0.0) {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(self, guaranteed: bool) -> InvariantResult {
        let status = match (self.total, self.failures, guaranteed) {
            (0, _, _) => Status::Skipped,
            (_, 0, _) => Status::Pass,
            (_, _, true) => Status::Fail,
            (_, _, false) => Status::ExpectedFail,
        };
        let detail = match &self.first {
            None if self.total == 0 => "not applicable".to_string(),
            None => format!("{} checks, worst margin {:.3e}", self.total, self.worst),
            Some(first) => format!("{} of {} checks failed, worst margin {:.3e}; first: {first}", self.failures, self.total, self.worst),
        };
        InvariantResult { name: self.name, status, detail }
    }
}

fn scale(v: f64) -> f64 {
    v.abs().max(1.0)
}

/// Run every invariant for `p` under `params`.
pub fn certify(p: &ProblemInstance, params: &PlannedParams, opts: &CertifyOptions) -> Result<CertifyReport> {
    let mut out = Vec::new();

    let checks = verify_instance(p, crate::problem::instances::VERIFY_SAMPLES, opts.seed);
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
    out.push(InvariantResult {
        name: "oracle_checks",
        status: if failed.is_empty() { Status::Pass } else { Status::Fail },
        detail: if failed.is_empty() { format!("{} checks", checks.len()) } else { failed.join("; ") },
    });

    let ev = Evaluator::new(p, params);
    let mut s = Sampler::new(p.dimension, p.sample_radius, opts.seed.wrapping_add(100));
    let mut tangency = Tally::new("model_tangency");
    let mut forms = Tally::new("model_forms_agree");
    let mut env = Tally::new("envelope_below_phi");
    for _ in 0..opts.samples {
        // points of dom g come out of the operator itself
        let (a, b) = (ev.point(&s.point())?, ev.point(&s.point())?);
        let x = ev.operator(&a, &b)?;
        let xm = ev.point(&s.point())?;
        let w = ev.operator(&xm, &a)?;
        let phi = ev.phi(&x).to_f64();
        let m = ev.model(&x, &x, &xm).to_f64();
        tangency.add(IDENTITY_TOL * scale(phi) - (m - phi).abs(), || format!("M(x;x,x-) = {m}, phi(x) = {phi} at x = {:?}", x.x.as_slice()));
        let (ip, md) = (ev.model(&w, &x, &xm).to_f64(), ev.model_md(&w, &x, &xm).to_f64());
        forms.add(IDENTITY_TOL * scale(ip) - (ip - md).abs(), || format!("inner-product form {ip}, divergence form {md}"));
        let xbar = ev.operator(&x, &xm)?;
        let e = ev.model(&xbar, &x, &xm).to_f64();
        env.add(ENVELOPE_TOL * scale(phi) - (e - phi), || format!("E = {e} > phi = {phi}"));
    }
    out.push(tangency.finish(true));
    out.push(forms.finish(true));
    out.push(env.finish(true));

    let mut quiet = params.clone();
    quiet.certified = false;
    let run_opts = SolverOptions::with_stop(StopCriteria {
        eps_residual: 1e-12,
        max_iters: opts.iterations.saturating_mul(TAIL_HORIZON).max(1),
    });
    let mut sd = Tally::new("merit_decrease");
    let mut lgeq = Tally::new("value_bound");
    let mut tails = Tally::new("summability");
    let mut s = Sampler::new(p.dimension, p.sample_radius, opts.seed.wrapping_add(200));
    for i in 0..opts.starts {
        let (xm, x0) = (s.point(), s.point());
        let o = run(p, &quiet, &xm, &x0, &run_opts)?;
        for r in o.trace.iter().take(opts.iterations) {
            if let Some(v) = r.slack_sd {
                sd.add(v + CERT_SLACK, || format!("start {i}, step {}: slack {v:.3e}", r.k));
            }
            if let Some(v) = r.slack_lgeq {
                lgeq.add(v + CERT_SLACK, || format!("start {i}, step {}: slack {v:.3e}", r.k));
            }
        }
        let k0 = opts.iterations;
        let tail: f64 = o.trace.iter().skip(k0).map(|r| r.d_step).sum();
        tails.add(TAIL_SUM_TOL - tail, || format!("start {i}: tail sum from step {k0} is {tail:.3e} over {} steps", o.trace.len()));
    }
    out.push(sd.finish(params.certified));
    out.push(lgeq.finish(params.certified));
    out.push(tails.finish(params.certified));

    out.push(oracle_equivalence(p, params, opts)?);

    let passed = out.iter().all(|r| r.status != Status::Fail);
    Ok(CertifyReport {
        instance: p.name.clone(),
        kernel: p.kernel.name().to_string(),
        planned: params.clone(),
        invariants: out,
        passed,
    })
}

/// With `g = 0` and the Euclidean kernel the operator is the explicit step
/// `x - gamma (2 grad f(x) - grad f(x-)) + beta (x - x-)`.
fn oracle_equivalence(p: &ProblemInstance, params: &PlannedParams, opts: &CertifyOptions) -> Result<InvariantResult> {
    let mut t = Tally::new("oracle_equivalence");
    if p.g.name() == "zero" && p.kernel.name() == "euclidean" {
        let ev = Evaluator::new(p, params);
        let mut s = Sampler::new(p.dimension, p.sample_radius, opts.seed.wrapping_add(300));
        for _ in 0..opts.samples.min(200) {
            let (x, xm) = (s.point(), s.point());
            let explicit: Vector = &x - (p.f.gradient(&x) * 2.0 - p.f.gradient(&xm)) * params.gamma + (&x - &xm) * params.beta;
            let got = ev.operator(&ev.point(&x)?, &ev.point(&xm)?)?.x;
            let err = (&got - &explicit).norm();
            t.add(1e-12 * scale(explicit.norm()) - err, || format!("error {err:.3e} at x = {:?}", x.as_slice()));
        }
    }
    Ok(t.finish(true))
}
