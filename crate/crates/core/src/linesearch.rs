//! Linesearch globalization: a fast direction `d` at `x` is blended with
//! the safeguard step `xbar in T(x, y-)` until the merit drops enough.
//!
//! Trial points for `tau in {1, 1/2, ...}`:
//! `y = x + tau d`, `x+ = (1 - tau) xbar + tau (x + d)`, accepted when
//! `L(x+, y) <= L(x, y-) - (delta c / 2gamma)(D(xbar, x) + D(x, y-))`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::envelope::{certificate, EnvelopeCache, MeritParts, MeritSpec};
use crate::error::{Error, Result};
use crate::kernel::Vector;
use crate::planner::PlannedParams;
use crate::problem::ProblemInstance;
use crate::solver::{elapsed_ns, Evaluator, IterationRecord, PointData, RunOutcome, RunStatus, SolverOptions, CERT_SLACK};

/// Proposes update directions from the history of fixed-point residuals
/// `r(x) = x - T(x, x)`.
pub trait DirectionProvider {
    fn name(&self) -> String;

    /// Record `(x, r(x))` and return a finite direction at `x`.
    fn direction(&mut self, x: &Vector, r: &Vector) -> Vector;

    fn reset(&mut self);
}

/// Always `d = 0`: the linesearch degenerates to plain iterations with
/// `y = x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDirection;

impl DirectionProvider for ZeroDirection {
    fn name(&self) -> String {
        "zero".into()
    }
    fn direction(&mut self, x: &Vector, _r: &Vector) -> Vector {
        Vector::zeros(x.len())
    }
    fn reset(&mut self) {}
}

/// Limited-memory Broyden ("good" update) on the inverse Jacobian of `r`:
/// `H = I + sum u_i v_i'`, updated with `H+ = H + (s - Hy) s'H / (s'Hy)`.
/// Updates with a nearly vanishing denominator are skipped; once `memory`
/// pairs are stored the approximation restarts from the identity, since
/// later pairs are built on earlier ones and cannot be dropped singly.
#[derive(Debug, Clone)]
pub struct BroydenProvider {
    memory: usize,
    pairs: Vec<(Vector, Vector)>,
    last: Option<(Vector, Vector)>,
    pub skipped: usize,
    pub restarts: usize,
}

impl BroydenProvider {
    pub fn new(memory: usize) -> Self {
        BroydenProvider { memory, pairs: Vec::new(), last: None, skipped: 0, restarts: 0 }
    }

    fn apply(&self, r: &Vector) -> Vector {
        let mut out = r.clone();
        for (u, v) in &self.pairs {
            out += u * v.dot(r);
        }
        out
    }

    fn apply_t(&self, s: &Vector) -> Vector {
        let mut out = s.clone();
        for (u, v) in &self.pairs {
            out += v * u.dot(s);
        }
        out
    }

    fn update(&mut self, s: &Vector, y: &Vector) {
        let hy = self.apply(y);
        let denom = s.dot(&hy);
        if denom.abs() < 1e-12 * s.norm() * hy.norm() || denom == 0.0 {
            self.skipped += 1;
            return;
        }
        if self.pairs.len() >= self.memory {
            self.pairs.clear();
            self.restarts += 1;
            return;
        }
        let u = (s - &hy) / denom;
        let v = self.apply_t(s);
        self.pairs.push((u, v));
    }
}

impl DirectionProvider for BroydenProvider {
    fn name(&self) -> String {
        format!("broyden({})", self.memory)
    }

    fn direction(&mut self, x: &Vector, r: &Vector) -> Vector {
        if self.memory == 0 {
            return -r;
        }
        if let Some((xp, rp)) = self.last.take() {
            let s = x - xp;
            let y = r - rp;
            if s.norm() > 0.0 {
                self.update(&s, &y);
            }
        }
        self.last = Some((x.clone(), r.clone()));
        let d = -self.apply(r);
        if d.iter().all(|v| v.is_finite()) {
            d
        } else {
            self.pairs.clear();
            -r
        }
    }

    fn reset(&mut self) {
        self.pairs.clear();
        self.last = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinesearchConfig {
    /// Sufficient-decrease factor in `(0, 1)`.
    pub delta: f64,
    /// Smallest stepsize tried before falling back to `tau = 0`.
    pub tau_min: f64,
    pub max_backtracks: usize,
}

impl Default for LinesearchConfig {
    fn default() -> Self {
        LinesearchConfig { delta: 0.5, tau_min: 1e-12, max_backtracks: 40 }
    }
}

impl LinesearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("linesearch delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.tau_min > 0.0) {
            return Err(Error::Config(format!("linesearch tau_min must be positive, got {}", self.tau_min)));
        }
        Ok(())
    }
}

/// State carried between linesearch steps.
#[derive(Debug, Clone)]
pub struct LsState {
    pub x: PointData,
    pub y_prev: PointData,
}

/// Result of one linesearch step.
#[derive(Debug, Clone)]
pub struct LsStep {
    pub x_next: PointData,
    pub y: PointData,
    pub xbar: PointData,
    pub d: Vector,
    /// Accepted stepsize; 0 for the safeguard fallback.
    pub tau: f64,
    pub backtracks: usize,
    pub fallback: bool,
    /// `xbar = x = y-`: the current point is stationary.
    pub stationary: bool,
    /// `L(x, y-)`.
    pub merit: f64,
    pub envelope: f64,
    /// Slack of the sufficient-decrease test at the accepted point.
    pub slack_ls: f64,
    /// Slack of `phi(xbar) <= L(x, y-) - (c/gamma) D(xbar, x) - (c/2gamma) D(x, y-)`.
    pub slack_lgeq: f64,
    /// `L(x+, y)`, the merit at the start of the next step.
    pub merit_next: f64,
}

/// One step from `(x^k, y^{k-1})`.
pub fn ls_step(
    ev: &Evaluator,
    spec: &MeritSpec,
    cfg: &LinesearchConfig,
    provider: &mut dyn DirectionProvider,
    cache: &mut EnvelopeCache,
    state: &LsState,
) -> Result<LsStep> {
    let p = &spec.params;
    let (x, ym) = (&state.x, &state.y_prev);
    let (xbar, parts): (PointData, MeritParts) = cache.get(ev, spec, x, ym)?;
    let merit = parts.total();
    let d_bar = ev.dh(&xbar, x);
    let d_prev = ev.dh(x, ym);
    let cert = certificate(p, merit, f64::NEG_INFINITY, ev.phi(&xbar), d_bar, d_prev);
    let stationary = xbar.x == x.x && x.x == ym.x;
    if stationary {
        return Ok(LsStep {
            x_next: xbar.clone(),
            y: x.clone(),
            xbar,
            d: Vector::zeros(x.x.len()),
            tau: 1.0,
            backtracks: 0,
            fallback: false,
            stationary,
            merit,
            envelope: parts.envelope.to_f64(),
            slack_ls: 0.0,
            slack_lgeq: cert.slack_lgeq,
            merit_next: merit,
        });
    }
    let (t0, _) = cache.get(ev, spec, x, x)?;
    let r = &x.x - &t0.x;
    let d = provider.direction(&x.x, &r);
    let target = merit - cfg.delta * p.c / (2.0 * p.gamma) * (d_bar + d_prev);
    // merit differences near a solution fall to rounding level; with d = 0
    // the unit trial is the null step x+ = x and gets no allowance
    let roundoff = if d.iter().any(|&v| v != 0.0) { 16.0 * f64::EPSILON * (1.0 + merit.abs()) } else { 0.0 };
    let full = &x.x + &d;
    let mut tau = 1.0;
    let mut backtracks = 0;
    loop {
        let (xt, yt) = if tau == 1.0 {
            (full.clone(), full.clone())
        } else {
            (&xbar.x * (1.0 - tau) + &full * tau, &x.x + &d * tau)
        };
        // a trial that reproduces (x, y-) cannot make progress, even when
        // the required decrease is lost to rounding
        let repeats = xt == x.x && yt == ym.x;
        let in_domain = ev.problem.kernel.in_domain(&xt) && ev.problem.kernel.in_domain(&yt);
        if in_domain && !repeats {
            let (xtd, ytd) = (ev.point(&xt)?, ev.point(&yt)?);
            let (_, pt) = cache.get(ev, spec, &xtd, &ytd)?;
            let mt = pt.total();
            if mt <= target + roundoff {
                return Ok(LsStep {
                    x_next: xtd,
                    y: ytd,
                    xbar,
                    d,
                    tau,
                    backtracks,
                    fallback: false,
                    stationary,
                    merit,
                    envelope: parts.envelope.to_f64(),
                    slack_ls: target - mt,
                    slack_lgeq: cert.slack_lgeq,
                    merit_next: mt,
                });
            }
        }
        if backtracks >= cfg.max_backtracks || tau * 0.5 < cfg.tau_min {
            break;
        }
        tau *= 0.5;
        backtracks += 1;
    }
    log::warn!("linesearch exhausted {backtracks} backtracks; taking the safeguard step");
    let (_, pb) = cache.get(ev, spec, &xbar, x)?;
    let mb = pb.total();
    Ok(LsStep {
        x_next: xbar.clone(),
        y: x.clone(),
        xbar,
        d,
        tau: 0.0,
        backtracks,
        fallback: true,
        stationary,
        merit,
        envelope: parts.envelope.to_f64(),
        slack_ls: target - mb,
        slack_lgeq: cert.slack_lgeq,
        merit_next: mb,
    })
}

/// Per-step diagnostics not carried by the trace.
#[derive(Debug, Clone)]
pub struct LsStepInfo {
    pub x: Vector,
    pub d: Vector,
    pub tau: f64,
    pub backtracks: usize,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct LsOutcome {
    pub run: RunOutcome,
    pub steps: Vec<LsStepInfo>,
    pub fallbacks: usize,
}

/// Run the linesearch method from `(x^{-1}, x^0)` with `y^{-1} = x^{-1}`.
///
/// Trace rows: `x = x^{k+1}`, `phi = phi(x^{k+1})`, `merit = L(x^k, y^{k-1})`,
/// `D_step = D(xbar^k, x^k)`, and the residual
/// `grad hhat(x^k) - grad hhat(xbar^k) - grad fb(x^k) + grad fb(y^{k-1})`.
pub fn run_ls(
    p: &ProblemInstance,
    params: &PlannedParams,
    cfg: &LinesearchConfig,
    provider: &mut dyn DirectionProvider,
    x_minus1: &Vector,
    x0: &Vector,
    opts: &SolverOptions,
) -> Result<LsOutcome> {
    cfg.validate()?;
    let ev = Evaluator::new(p, params).with_tie_break(opts.tie_break);
    let spec = MeritSpec::new(params.clone());
    let mut cache = EnvelopeCache::new();
    let mut state = LsState { x: ev.point(x0)?, y_prev: ev.point(x_minus1)? };
    let mut trace = Vec::new();
    let mut steps = Vec::new();
    let mut status = RunStatus::MaxIters;
    let mut failure = None;
    let mut fallbacks = 0;
    let mut final_merit = f64::NAN;
    for k in 0..opts.stop.max_iters {
        let start = Instant::now();
        let step = ls_step(&ev, &spec, cfg, provider, &mut cache, &state)?;
        let residual_norm = ev.residual(&step.xbar, &state.x, &state.y_prev).norm();
        let d_step = ev.dh(&step.xbar, &state.x);
        fallbacks += step.fallback as usize;
        final_merit = step.merit_next;
        trace.push(IterationRecord {
            k,
            x: step.x_next.x.clone(),
            phi: ev.phi(&step.x_next).to_f64(),
            merit: step.merit,
            envelope: step.envelope,
            d_step,
            residual_norm,
            tau: Some(step.tau),
            wall_ns: elapsed_ns(start),
            slack_sd: Some(step.slack_ls),
            slack_lgeq: Some(step.slack_lgeq),
        });
        steps.push(LsStepInfo {
            x: state.x.x.clone(),
            d: step.d.clone(),
            tau: step.tau,
            backtracks: step.backtracks,
            fallback: step.fallback,
        });
        let ok = step.slack_ls >= -CERT_SLACK && step.slack_lgeq >= -CERT_SLACK;
        if params.certified && !ok {
            failure = Some(format!(
                "step {k}: linesearch slack {:.3e}, value-bound slack {:.3e}",
                step.slack_ls, step.slack_lgeq
            ));
            status = RunStatus::CertificationFailed;
            break;
        }
        let settled = opts.stop.settled(residual_norm, d_step);
        if step.stationary || settled {
            status = RunStatus::Converged;
            break;
        }
        // keep the cache from growing without bound on long runs
        if cache.len() > 64 {
            cache.clear();
        }
        state = LsState { x: step.x_next, y_prev: step.y };
    }
    Ok(LsOutcome { run: RunOutcome { trace, status, failure, final_merit }, steps, fallbacks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan, PlanMode, PlanRequest};
    use crate::problem::instances;
    use crate::solver::{run, StopCriteria};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn broyden_basics() {
        let mut b = BroydenProvider::new(0);
        assert_eq!(b.direction(&v(&[1.0]), &v(&[2.0])), v(&[-2.0]));
        let mut b = BroydenProvider::new(5);
        assert_eq!(b.direction(&v(&[1.0]), &v(&[0.0])), v(&[0.0]));
    }

    #[test]
    fn broyden_solves_affine_1d_in_two_steps() {
        // r(x) = 3x - 6, root at 2
        let r = |x: f64| 3.0 * x - 6.0;
        let mut b = BroydenProvider::new(5);
        let mut x = 0.0;
        for _ in 0..2 {
            let d = b.direction(&v(&[x]), &v(&[r(x)]));
            x += d[0];
        }
        assert!((x - 2.0).abs() < 1e-14, "{x}");
    }

    #[test]
    fn zero_direction_backtracks_toward_safeguard_and_converges() {
        // with d = 0 the unit trial leaves x in place; progress comes from
        // small tau, where x+ approaches xbar
        let p = instances::quartic1d().unwrap();
        let params = plan(&p, &PlanRequest { mode: PlanMode::ThmSdA, ..Default::default() }).unwrap();
        let opts = SolverOptions::with_stop(StopCriteria { eps_residual: 1e-9, max_iters: 5000 });
        let (xm, x0) = (v(&[0.4]), v(&[0.5]));
        let ls = run_ls(&p, &params, &LinesearchConfig::default(), &mut ZeroDirection, &xm, &x0, &opts).unwrap();
        assert_eq!(ls.run.status, RunStatus::Converged);
        assert!(ls.run.trace.iter().all(|r| r.slack_sd.unwrap() >= -CERT_SLACK));
        assert!((ls.run.last_x().unwrap()[0] - 1.0).abs() < 1e-4);
        let plain = run(&p, &params, &xm, &x0, &opts).unwrap();
        assert_eq!(plain.status, RunStatus::Converged);
    }

    #[test]
    fn stationary_start_is_reported() {
        let p = instances::quartic1d().unwrap();
        let params = plan(&p, &PlanRequest::default()).unwrap();
        let ev = Evaluator::new(&p, &params);
        let spec = MeritSpec::new(params.clone());
        let one = ev.point(&v(&[1.0])).unwrap();
        let state = LsState { x: one.clone(), y_prev: one };
        let mut cache = EnvelopeCache::new();
        let step = ls_step(&ev, &spec, &LinesearchConfig::default(), &mut BroydenProvider::new(5), &mut cache, &state).unwrap();
        assert!(step.stationary);
        assert_eq!(step.xbar.x, v(&[1.0]));
    }
}
