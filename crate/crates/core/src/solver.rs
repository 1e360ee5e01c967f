//! The inertial forward-reflected-backward iteration.
//!
//! Each step solves `min_w gamma g(w) + h(w) - <tilt, w>` with
//! `tilt = grad h(x) - gamma (2 grad f(x) - grad f(x-)) + beta (grad h(x) - grad h(x-))`,
//! which is the minimization of the model
//! `M(w; x, x-) = phi(w) + D_hhat(w, x) + <w - x, grad fb(x) - grad fb(x-)>`
//! with `hhat = h/gamma - f` and `fb = f - (beta/gamma) h`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::envelope::{certificate, merit_parts, MeritSpec};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::kernel::Vector;
use crate::planner::PlannedParams;
use crate::problem::ProblemInstance;

/// Absolute slack on the decrease inequalities.
pub const CERT_SLACK: f64 = 1e-9;

/// Oracle values cached at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointData {
    pub x: Vector,
    pub f: f64,
    pub grad_f: Vector,
    pub h: f64,
    pub grad_h: Vector,
    pub g: Ext,
}

/// How to pick among tied subproblem minimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Farthest from the current iterate; reproduces the alternating
    /// sequence of the two-point example.
    #[default]
    Farthest,
    Nearest,
    First,
}

impl TieBreak {
    pub fn pick(self, candidates: Vec<Vector>, x: &Vector) -> Vector {
        let dist = |w: &Vector| (w - x).norm();
        let mut it = candidates.into_iter();
        let first = it.next().expect("prox returned no candidate");
        match self {
            TieBreak::First => first,
            TieBreak::Farthest => it.fold(first, |best, w| if dist(&w) > dist(&best) { w } else { best }),
            TieBreak::Nearest => it.fold(first, |best, w| if dist(&w) < dist(&best) { w } else { best }),
        }
    }
}

/// Oracle access bound to one instance and parameter set.
#[derive(Clone, Copy)]
pub struct Evaluator<'a> {
    pub problem: &'a ProblemInstance,
    pub params: &'a PlannedParams,
    pub tie_break: TieBreak,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a ProblemInstance, params: &'a PlannedParams) -> Self {
        Evaluator { problem, params, tie_break: TieBreak::default() }
    }

    pub fn with_tie_break(mut self, t: TieBreak) -> Self {
        self.tie_break = t;
        self
    }

    /// Evaluate and cache the oracles at `x`; `x` must lie in the kernel domain.
    pub fn point(&self, x: &Vector) -> Result<PointData> {
        let p = self.problem;
        if x.len() != p.dimension {
            return Err(Error::Dimension { expected: p.dimension, got: x.len() });
        }
        if !p.kernel.in_domain(x) {
            return Err(Error::DomainExit(format!("{}", x.transpose())));
        }
        let h = p.kernel.value(x).finite().ok_or_else(|| Error::NonFinite(format!("h at {}", x.transpose())))?;
        let f = p.f.value(x);
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("f at {}", x.transpose())));
        }
        Ok(PointData { x: x.clone(), f, grad_f: p.f.gradient(x), h, grad_h: p.kernel.gradient(x), g: p.g.value(x) })
    }

    pub fn phi(&self, d: &PointData) -> Ext {
        Ext::from_f64(d.f) + d.g
    }

    /// `grad hhat = grad h / gamma - grad f`.
    pub fn grad_hhat(&self, d: &PointData) -> Vector {
        &d.grad_h / self.params.gamma - &d.grad_f
    }

    /// `grad fb = grad f - (beta/gamma) grad h`.
    pub fn grad_fbeta(&self, d: &PointData) -> Vector {
        &d.grad_f - &d.grad_h * (self.params.beta / self.params.gamma)
    }

    /// Kernel Bregman distance between cached points.
    pub fn dh(&self, a: &PointData, b: &PointData) -> f64 {
        match self.problem.kernel.divergence(&a.x, &b.x) {
            Some(d) => d.max(0.0),
            None => (a.h - b.h - b.grad_h.dot(&(&a.x - &b.x))).max(0.0),
        }
    }

    /// `D_f(a, b)`, possibly negative.
    pub fn df(&self, a: &PointData, b: &PointData) -> f64 {
        a.f - b.f - b.grad_f.dot(&(&a.x - &b.x))
    }

    pub fn tilt(&self, x: &PointData, xm: &PointData) -> Vector {
        let (gamma, beta) = (self.params.gamma, self.params.beta);
        &x.grad_h - (&x.grad_f * 2.0 - &xm.grad_f) * gamma + (&x.grad_h - &xm.grad_h) * beta
    }

    /// All minimizers of the model the prox oracle reports.
    pub fn operator_candidates(&self, x: &PointData, xm: &PointData) -> Result<Vec<Vector>> {
        let tilt = self.tilt(x, xm);
        let ws = self.problem.g.tilted_prox(self.problem.kernel.as_ref(), self.params.gamma, &tilt)?;
        if ws.is_empty() {
            return Err(Error::Prox("empty minimizer set".into()));
        }
        Ok(ws)
    }

    /// One element of `T(x, x-)`, chosen by the tie-break rule.
    pub fn operator(&self, x: &PointData, xm: &PointData) -> Result<PointData> {
        let w = self.tie_break.pick(self.operator_candidates(x, xm)?, &x.x);
        self.point(&w)
    }

    /// Model in inner-product form.
    pub fn model(&self, w: &PointData, x: &PointData, xm: &PointData) -> Ext {
        let gamma = self.params.gamma;
        let d_hhat = self.dh(w, x) / gamma - self.df(w, x);
        let lin = (&w.x - &x.x).dot(&(self.grad_fbeta(x) - self.grad_fbeta(xm)));
        self.phi(w) + d_hhat + lin
    }

    /// Model in three-distance form:
    /// `phi(w) + D_{hhat - fb}(w, x) + D_fb(w, x-) - D_fb(x, x-)`.
    pub fn model_md(&self, w: &PointData, x: &PointData, xm: &PointData) -> Ext {
        let (gamma, beta) = (self.params.gamma, self.params.beta);
        let d_diff = (1.0 + beta) / gamma * self.dh(w, x) - 2.0 * self.df(w, x);
        let d_fb = |a: &PointData, b: &PointData| self.df(a, b) - beta / gamma * self.dh(a, b);
        self.phi(w) + d_diff + d_fb(w, xm) - d_fb(x, xm)
    }

    /// `v = grad hhat(x) - grad hhat(x+) - grad fb(x) + grad fb(x-)`.
    pub fn residual(&self, xn: &PointData, x: &PointData, xm: &PointData) -> Vector {
        self.grad_hhat(x) - self.grad_hhat(xn) - self.grad_fbeta(x) + self.grad_fbeta(xm)
    }

    /// Compare caches with fresh oracle calls.
    pub fn check_cache(&self, d: &PointData) -> Result<()> {
        let fresh = self.point(&d.x)?;
        if fresh != *d {
            return Err(Error::Verification(format!("stale oracle cache at {}", d.x.transpose())));
        }
        Ok(())
    }
}

/// `M(w; x, x-)` in inner-product form.
pub fn model_value(p: &ProblemInstance, params: &PlannedParams, w: &Vector, x: &Vector, x_minus: &Vector) -> Result<Ext> {
    let ev = Evaluator::new(p, params);
    if !p.kernel.in_domain(w) {
        return Ok(Ext::PosInf);
    }
    Ok(ev.model(&ev.point(w)?, &ev.point(x)?, &ev.point(x_minus)?))
}

/// `M(w; x, x-)` in three-distance form.
pub fn model_value_md(p: &ProblemInstance, params: &PlannedParams, w: &Vector, x: &Vector, x_minus: &Vector) -> Result<Ext> {
    let ev = Evaluator::new(p, params);
    if !p.kernel.in_domain(w) {
        return Ok(Ext::PosInf);
    }
    Ok(ev.model_md(&ev.point(w)?, &ev.point(x)?, &ev.point(x_minus)?))
}

/// An element of `T(x, x-)` under the default tie-break.
pub fn frb_operator(p: &ProblemInstance, params: &PlannedParams, x: &Vector, x_minus: &Vector) -> Result<Vector> {
    let ev = Evaluator::new(p, params);
    Ok(ev.operator(&ev.point(x)?, &ev.point(x_minus)?)?.x)
}

/// Subgradient estimate at `x_next`: `dist(0, subdiff phi(x_next)) <= |v|`.
pub fn residual(p: &ProblemInstance, params: &PlannedParams, x_next: &Vector, x: &Vector, x_minus: &Vector) -> Result<Vector> {
    let ev = Evaluator::new(p, params);
    Ok(ev.residual(&ev.point(x_next)?, &ev.point(x)?, &ev.point(x_minus)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopCriteria {
    pub eps_residual: f64,
    pub max_iters: usize,
}

impl StopCriteria {
    /// Residual below tolerance on a step that has also stopped moving. The
    /// residual alone can vanish on a non-convergent sequence that hops
    /// between isolated stationary points.
    pub fn settled(&self, residual_norm: f64, d_step: f64) -> bool {
        residual_norm <= self.eps_residual && d_step <= self.eps_residual
    }
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria { eps_residual: 1e-8, max_iters: 100_000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub stop: StopCriteria,
    pub tie_break: TieBreak,
    /// Recheck oracle caches and model minimality every this many steps
    /// (0 disables).
    pub debug_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            stop: StopCriteria::default(),
            tie_break: TieBreak::default(),
            debug_every: if cfg!(debug_assertions) { 64 } else { 0 },
        }
    }
}

impl SolverOptions {
    pub fn with_stop(stop: StopCriteria) -> Self {
        SolverOptions { stop, ..Default::default() }
    }
}

/// One trace row. Row `k` describes the step `x^{k+1} in T(x^k, x^{k-1})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `x^{k+1}`.
    pub x: Vector,
    /// `phi(x^{k+1})`, `+inf` outside `dom g`.
    pub phi: f64,
    /// `L(x^k, x^{k-1})`.
    pub merit: f64,
    /// `E(x^k, x^{k-1})`.
    pub envelope: f64,
    /// `D(x^{k+1}, x^k)`.
    pub d_step: f64,
    pub residual_norm: f64,
    pub tau: Option<f64>,
    pub wall_ns: u64,
    /// Signed slack of the merit decrease for this step, filled once the
    /// next merit is known.
    pub slack_sd: Option<f64>,
    /// Signed slack of the bound on `phi(x^{k+1})`.
    pub slack_lgeq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    MaxIters,
    CertificationFailed,
}

impl RunStatus {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Converged => 0,
            RunStatus::MaxIters => 2,
            RunStatus::CertificationFailed => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Vec<IterationRecord>,
    pub status: RunStatus,
    /// First violated certificate, if any.
    pub failure: Option<String>,
    /// `L(x^{K+1}, x^K)` after the last row.
    pub final_merit: f64,
}

impl RunOutcome {
    pub fn last_x(&self) -> Option<&Vector> {
        self.trace.last().map(|r| &r.x)
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

pub(crate) fn elapsed_ns(t: Instant) -> u64 {
    t.elapsed().as_nanos().min(u64::MAX as u128) as u64
}

/// Probe the model around `w` and fail if a probe beats it.
pub(crate) fn probe_minimality(ev: &Evaluator, w: &PointData, x: &PointData, xm: &PointData) -> Result<()> {
    let mw = ev.model(w, x, xm);
    let n = w.x.len();
    for i in 0..n {
        for s in [-1e-4, 1e-4, -1e-2, 1e-2] {
            let mut z = w.x.clone();
            z[i] += s;
            if !ev.problem.kernel.in_domain(&z) {
                continue;
            }
            let mz = ev.model(&ev.point(&z)?, x, xm);
            let tol = 1e-9 * (1.0 + mw.to_f64().abs());
            if !mw.le_with_tol(mz, tol) {
                return Err(Error::Verification(format!(
                    "model at {} ({mz}) beats the subproblem solution {} ({mw})",
                    z.transpose(),
                    w.x.transpose()
                )));
            }
        }
    }
    Ok(())
}

/// Run the iteration from `(x^{-1}, x^0)`.
///
/// Certified parameter sets abort on the first decrease violation beyond
/// [`CERT_SLACK`]; manual ones only record slacks.
pub fn run(p: &ProblemInstance, params: &PlannedParams, x_minus1: &Vector, x0: &Vector, opts: &SolverOptions) -> Result<RunOutcome> {
    let ev = Evaluator::new(p, params).with_tie_break(opts.tie_break);
    let spec = MeritSpec::new(params.clone());
    let mut xm = ev.point(x_minus1)?;
    let mut x = ev.point(x0)?;
    let mut xn = ev.operator(&x, &xm)?;
    let mut parts = merit_parts(&ev, &spec, &xn, &x, &xm);
    let mut d_cur = ev.dh(&x, &xm);
    let mut trace = Vec::new();
    let mut status = RunStatus::MaxIters;
    let mut failure = None;
    let mut final_merit = parts.total();
    for k in 0..opts.stop.max_iters {
        let start = Instant::now();
        if opts.debug_every > 0 && k % opts.debug_every == 0 {
            ev.check_cache(&x)?;
            probe_minimality(&ev, &xn, &x, &xm)?;
        }
        let d_step = ev.dh(&xn, &x);
        let residual_norm = ev.residual(&xn, &x, &xm).norm();
        let xnn = ev.operator(&xn, &x)?;
        let parts_next = merit_parts(&ev, &spec, &xnn, &xn, &x);
        let phi_next = ev.phi(&xn);
        let cert = certificate(params, parts.total(), parts_next.total(), phi_next, d_step, d_cur);
        final_merit = parts_next.total();
        trace.push(IterationRecord {
            k,
            x: xn.x.clone(),
            phi: phi_next.to_f64(),
            merit: parts.total(),
            envelope: parts.envelope.to_f64(),
            d_step,
            residual_norm,
            tau: None,
            wall_ns: elapsed_ns(start),
            slack_sd: Some(cert.slack_sd),
            slack_lgeq: Some(cert.slack_lgeq),
        });
        if params.certified && !cert.ok {
            failure = Some(format!(
                "step {k}: decrease slack {:.3e}, value-bound slack {:.3e}",
                cert.slack_sd, cert.slack_lgeq
            ));
            status = RunStatus::CertificationFailed;
            break;
        }
        xm = std::mem::replace(&mut x, std::mem::replace(&mut xn, xnn));
        parts = parts_next;
        d_cur = d_step;
        if opts.stop.settled(residual_norm, d_step) {
            status = RunStatus::Converged;
            break;
        }
    }
    Ok(RunOutcome { trace, status, failure, final_merit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan, PlanMode, PlanRequest};
    use crate::problem::instances;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn manual(p: &ProblemInstance, alpha: f64, beta: f64) -> PlannedParams {
        plan(p, &PlanRequest { mode: PlanMode::Manual, alpha: Some(alpha), beta: Some(beta), ..Default::default() }).unwrap()
    }

    #[test]
    fn two_point_example_alternates() {
        let p = instances::counterexample(1.0).unwrap();
        let params = manual(&p, 0.5, 0.0);
        let opts = SolverOptions::with_stop(StopCriteria { eps_residual: 0.0, max_iters: 20 });
        let out = run(&p, &params, &v(&[-1.0]), &v(&[1.0]), &opts).unwrap();
        assert_eq!(out.status, RunStatus::MaxIters);
        for r in &out.trace {
            let expect = if r.k % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(r.x[0], expect);
            assert_eq!(r.d_step, 2.0);
        }
    }

    #[test]
    fn two_point_example_stalls_below_threshold() {
        let p = instances::counterexample(1.0).unwrap();
        let params = manual(&p, 0.3, 0.0);
        let opts = SolverOptions::with_stop(StopCriteria { eps_residual: 0.0, max_iters: 10 });
        let out = run(&p, &params, &v(&[1.0]), &v(&[1.0]), &opts).unwrap();
        assert!(out.trace.iter().all(|r| r.x[0] == 1.0 && r.d_step == 0.0));
    }

    #[test]
    fn euclidean_smooth_step_is_reflected_gradient() {
        let p = instances::convex_quadratic(Default::default()).unwrap();
        let params = plan(&p, &PlanRequest { mode: PlanMode::ThmSdA, ..Default::default() }).unwrap();
        let (x, xm) = (v(&[0.3, -1.0]), v(&[1.0, 0.5]));
        let (g, b) = (params.gamma, params.beta);
        let expect = &x - (p.f.gradient(&x) * 2.0 - p.f.gradient(&xm)) * g + (&x - &xm) * b;
        let got = frb_operator(&p, &params, &x, &xm).unwrap();
        assert!((got - expect).norm() < 1e-14);
    }

    #[test]
    fn model_tangency_and_forms() {
        let p = instances::nonconvex_qp_l1(Default::default()).unwrap();
        let params = plan(&p, &PlanRequest::default()).unwrap();
        let (w, x, xm) = (v(&[0.4, -0.2]), v(&[1.0, 0.3]), v(&[-0.5, 0.7]));
        let tangent = model_value(&p, &params, &x, &x, &xm).unwrap().to_f64();
        assert!((tangent - p.phi(&x).to_f64()).abs() < 1e-12);
        let a = model_value(&p, &params, &w, &x, &xm).unwrap().to_f64();
        let b = model_value_md(&p, &params, &w, &x, &xm).unwrap().to_f64();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn model_on_two_point_instance() {
        let p = instances::counterexample(1.0).unwrap();
        let params = manual(&p, 0.5, 0.0);
        let m = model_value(&p, &params, &v(&[1.0]), &v(&[1.0]), &v(&[-1.0])).unwrap();
        assert_eq!(m.to_f64(), 0.5);
    }

    #[test]
    fn residual_examples() {
        let p = instances::convex_quadratic(instances::ConvexQuadraticParams { dim: 1, ..Default::default() }).unwrap();
        let params = manual(&p, 1.0, 0.0); // gamma = 0.5 since L = 2
        let one = v(&[1.0]);
        assert_eq!(residual(&p, &params, &one, &one, &one).unwrap()[0], 0.0);
        // f = x^2 - x here, so grad hhat = 2x - (2x - 1) = 1 is constant
        let r = residual(&p, &params, &v(&[0.0]), &one, &one).unwrap();
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn certified_quartic_run_converges() {
        let p = instances::quartic1d().unwrap();
        let params = plan(&p, &PlanRequest { mode: PlanMode::ThmSdA, ..Default::default() }).unwrap();
        let out = run(&p, &params, &v(&[0.5]), &v(&[0.5]), &SolverOptions::default()).unwrap();
        assert_eq!(out.status, RunStatus::Converged, "{:?}", out.failure);
        assert!((out.last_x().unwrap()[0] - 1.0).abs() < 1e-4);
        for w in out.trace.windows(2) {
            assert!(w[1].merit <= w[0].merit + CERT_SLACK);
        }
    }

    #[test]
    fn tie_break_rules() {
        let c = vec![v(&[-1.0]), v(&[1.0])];
        assert_eq!(TieBreak::Farthest.pick(c.clone(), &v(&[1.0]))[0], -1.0);
        assert_eq!(TieBreak::Nearest.pick(c.clone(), &v(&[1.0]))[0], 1.0);
        assert_eq!(TieBreak::First.pick(c, &v(&[1.0]))[0], -1.0);
    }
}
