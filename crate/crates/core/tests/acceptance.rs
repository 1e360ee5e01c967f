//! Acceptance criteria. Runs as a plain binary (`harness = false`) so that
//! every criterion prints its own PASS/FAIL line; exits non-zero if any fail.

// `!(a > b)` is used on purpose: NaN must fail the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::Instant;

use bifrb::envelope::envelope_value;
use bifrb::harness::rates::{analyze_merits, exponent_from_theta, theta_from_exponent};
use bifrb::linesearch::{run_ls, BroydenProvider, LinesearchConfig};
use bifrb::planner::{
    c_regime_a, normalize_moduli, plan, plan_corollary, plan_thm_sd_a, CorollaryTag, KernelModuli,
    NormalizedModuli, PlanMode, PlanRequest, XiRegime,
};
use bifrb::problem::instances;
use bifrb::problem::verify::Sampler;
use bifrb::solver::{frb_operator, model_value, model_value_md, run, RunStatus, SolverOptions, StopCriteria};
use bifrb::{PlannedParams, ProblemInstance, Vector};
use bifrb_oracle::{grid_argmin, reference_envelope, subgradient_distance_1d};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SLACK_TOL: f64 = 1e-9;
const TAIL_TOL: f64 = 1e-6;
const EPS_RESIDUAL: f64 = 1e-8;
const MAX_ITERS: usize = 100_000;
const ORACLE_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-8;
const IDENTITY_TOL: f64 = 1e-9;
const ENVELOPE_TOL: f64 = 1e-12;
const RATE_R2: f64 = 0.99;
const THETA_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

fn build(name: &str, params: serde_json::Value) -> ProblemInstance {
    instances::build(name, &params).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn plan_mode(p: &ProblemInstance, mode: PlanMode) -> Option<PlannedParams> {
    plan(p, &PlanRequest { mode, ..Default::default() }).ok()
}

fn auto(p: &ProblemInstance) -> PlannedParams {
    plan(p, &PlanRequest::default()).unwrap_or_else(|e| panic!("{}: {e}", p.name))
}

fn stop(eps: f64, max_iters: usize) -> SolverOptions {
    SolverOptions { debug_every: 0, ..SolverOptions::with_stop(StopCriteria { eps_residual: eps, max_iters }) }
}

fn label(p: &ProblemInstance) -> String {
    format!("{}[{}d]", p.name, p.dimension)
}

/// Every instance with a certified plan, in one and two dimensions.
fn catalog() -> Vec<ProblemInstance> {
    let mut out = vec![build("counterexample", json!({})), build("quartic1d", json!({}))];
    for dim in [1, 2] {
        let d = json!({ "dim": dim });
        for name in ["nonconvex-qp-l1", "phase-retrieval", "convex-lasso", "concave-box", "convex-quadratic", "logcosh-toy"] {
            out.push(build(name, d.clone()));
        }
    }
    out.push(build("phase-retrieval", json!({ "g": "box" })));
    out.push(build("phase-retrieval", json!({ "g": "l1" })));
    out
}

fn one_dimensional() -> Vec<ProblemInstance> {
    catalog().into_iter().filter(|p| p.dimension == 1).collect()
}

fn random_pair(p: &ProblemInstance, seed: u64) -> (Vector, Vector) {
    let mut s = Sampler::new(p.dimension, p.sample_radius, seed);
    let xm = s.point();
    (xm, s.point())
}

/// Pairs inside `dom g`: operator outputs from random pairs.
fn feasible_pair(p: &ProblemInstance, params: &PlannedParams, s: &mut Sampler) -> (Vector, Vector) {
    let (a, b, c) = (s.point(), s.point(), s.point());
    let x = frb_operator(p, params, &a, &b).expect("operator");
    let xm = frb_operator(p, params, &c, &a).expect("operator");
    (x, xm)
}

fn criterion_1() -> Verdict {
    let p = build("counterexample", json!({}));
    let manual = |alpha: f64| {
        plan(&p, &PlanRequest { mode: PlanMode::Manual, alpha: Some(alpha), beta: Some(0.0), ..Default::default() }).unwrap()
    };
    let never = stop(-1.0, 1000);

    let params = manual(0.5);
    let out = run(&p, &params, &v(&[-1.0]), &v(&[1.0]), &never).unwrap();
    let mut bad = 0;
    for r in &out.trace {
        let expect = if r.k % 2 == 0 { -1.0 } else { 1.0 };
        if r.x[0] != expect || r.d_step != 2.0 {
            bad += 1;
        }
    }
    let alternating = out.trace.len() == 1000 && bad == 0 && out.status == RunStatus::MaxIters;

    let params = manual(0.3);
    let out3 = run(&p, &params, &v(&[1.0]), &v(&[1.0]), &never).unwrap();
    let constant = out3.trace.len() == 1000 && out3.trace.iter().all(|r| r.x[0] == 1.0 && r.d_step == 0.0);
    Verdict::new(
        alternating && constant,
        format!(
            "alpha=0.5: {} rows, {bad} off the +-1 alternation; alpha=0.3 from (1, 1): constant = {constant}",
            out.trace.len()
        ),
    )
}

/// Suites (ii)-(iv) of the descent criteria, with the regimes that apply.
fn descent_cases() -> (Vec<(String, ProblemInstance, PlannedParams)>, Vec<String>) {
    let mut suite = vec![build("nonconvex-qp-l1", json!({ "dim": 1 })), build("nonconvex-qp-l1", json!({ "dim": 2 }))];
    suite.push(build("quartic1d", json!({})));
    suite.push(build("phase-retrieval", json!({ "dim": 1 })));
    suite.push(build("phase-retrieval", json!({})));
    for dim in [1, 2] {
        for name in ["convex-lasso", "convex-quadratic", "concave-box", "logcosh-toy"] {
            suite.push(build(name, json!({ "dim": dim })));
        }
    }
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    for p in suite {
        for (mode, tag) in [(PlanMode::ThmSdA, "A"), (PlanMode::ThmSdB, "B")] {
            match plan_mode(&p, mode) {
                Some(params) => cases.push((format!("{}/{tag}", label(&p)), p.clone(), params)),
                None => skipped.push(format!("{}/{tag}", label(&p))),
            }
        }
    }
    (cases, skipped)
}

struct DescentRun {
    min_slack: f64,
    checked: usize,
    tail: f64,
    tail_settled: bool,
    aborted: bool,
}

fn descent_run(p: &ProblemInstance, params: &PlannedParams, seed: u64) -> DescentRun {
    let (xm, x0) = random_pair(p, seed);
    let first = run(p, params, &xm, &x0, &stop(-1.0, 500)).unwrap();
    let mut min_slack = f64::INFINITY;
    let mut checked = 0;
    for r in &first.trace {
        for s in [r.slack_sd, r.slack_lgeq].into_iter().flatten() {
            min_slack = min_slack.min(s);
            checked += 1;
        }
    }
    let aborted = first.status == RunStatus::CertificationFailed;
    if aborted || first.trace.len() < 500 {
        return DescentRun { min_slack, checked, tail: f64::INFINITY, tail_settled: false, aborted: true };
    }
    // sum_{k >= 500} D(x^k, x^{k-1}): the last row plus a continuation
    // from (x^499, x^500)
    let n = first.trace.len();
    let (x499, x500) = (&first.trace[n - 2].x, &first.trace[n - 1].x);
    let rest = run(p, params, x499, x500, &stop(1e-12, MAX_ITERS)).unwrap();
    let tail = first.trace[n - 1].d_step + rest.trace.iter().map(|r| r.d_step).sum::<f64>();
    DescentRun {
        min_slack,
        checked,
        tail,
        tail_settled: rest.status == RunStatus::Converged,
        aborted: rest.status == RunStatus::CertificationFailed,
    }
}

fn criteria_2_and_3() -> (Verdict, Verdict) {
    let (cases, skipped) = descent_cases();
    let mut worst_slack = f64::INFINITY;
    let mut worst_tail: f64 = 0.0;
    let mut checks = 0;
    let mut slack_fail = Vec::new();
    let mut tail_fail = Vec::new();
    for (name, p, params) in &cases {
        for start in 0..10u64 {
            let r = descent_run(p, params, 1000 + start);
            worst_slack = worst_slack.min(r.min_slack);
            worst_tail = worst_tail.max(r.tail);
            checks += r.checked;
            if r.aborted || r.min_slack < -SLACK_TOL {
                slack_fail.push(format!("{name} start {start} ({:.3e})", r.min_slack));
            }
            if !(r.tail < TAIL_TOL) || !r.tail_settled {
                tail_fail.push(format!("{name} start {start} (tail {:.3e}, settled {})", r.tail, r.tail_settled));
            }
        }
    }
    let na = if skipped.is_empty() { String::new() } else { format!("; not applicable: {}", skipped.join(", ")) };
    let c2 = Verdict::new(
        slack_fail.is_empty(),
        format!(
            "{} cases x 10 starts x 500 steps, {checks} inequalities, worst slack {worst_slack:.3e}{na}{}",
            cases.len(),
            if slack_fail.is_empty() { String::new() } else { format!("; failures: {}", slack_fail.join(", ")) }
        ),
    );
    let c3 = Verdict::new(
        tail_fail.is_empty(),
        format!(
            "{} runs, largest sum of D from step 500 on {worst_tail:.3e}{}",
            cases.len() * 10,
            if tail_fail.is_empty() { String::new() } else { format!("; failures: {}", tail_fail.join(", ")) }
        ),
    );
    (c2, c3)
}

fn criterion_4() -> Verdict {
    let mut fails = Vec::new();
    let mut runs = 0;
    let mut worst_iters = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for p in catalog().into_iter().filter(|p| p.level_bounded) {
        let params = auto(&p);
        for seed in 0..3u64 {
            runs += 1;
            let (xm, x0) = random_pair(&p, 2000 + seed);
            let out = run(&p, &params, &xm, &x0, &stop(EPS_RESIDUAL, MAX_ITERS)).unwrap();
            worst_iters = worst_iters.max(out.iterations());
            if out.status != RunStatus::Converged {
                fails.push(format!("{} seed {seed}: {:?}", label(&p), out.status));
                continue;
            }
            if p.dimension == 1 {
                let last = out.trace.last().unwrap();
                let phi = |t: f64| p.phi(&v(&[t])).to_f64();
                let dist = subgradient_distance_1d(phi, last.x[0], 1e-7);
                let gap = dist - last.residual_norm;
                worst_gap = worst_gap.max(gap);
                if !(gap <= ORACLE_TOL) {
                    fails.push(format!("{} seed {seed}: oracle distance {dist:.3e} vs residual {:.3e}", label(&p), last.residual_norm));
                }
            }
        }
    }
    Verdict::new(
        fails.is_empty(),
        format!(
            "{runs} runs to eps {EPS_RESIDUAL:e}, most iterations {worst_iters}; 1-d oracle distance minus residual at most {worst_gap:.3e}{}",
            if fails.is_empty() { String::new() } else { format!("; failures: {}", fails.join(", ")) }
        ),
    )
}

/// The subproblem objective in inner-product form, composed from the raw
/// oracles.
fn oracle_model<'a>(p: &'a ProblemInstance, params: &PlannedParams, x: f64, xm: f64) -> impl Fn(&[f64]) -> f64 + 'a {
    let (gamma, beta) = (params.gamma, params.beta);
    let f = |t: f64| p.f.value(&v(&[t]));
    let df = |t: f64| p.f.gradient(&v(&[t]))[0];
    let h = |t: f64| p.kernel.value(&v(&[t])).to_f64();
    let dh = |t: f64| p.kernel.gradient(&v(&[t]))[0];
    let dfb = move |t: f64| df(t) - beta / gamma * dh(t);
    let (fx, dfx, hx, dhx) = (f(x), df(x), h(x), dh(x));
    let shift = dfb(x) - dfb(xm);
    move |w: &[f64]| {
        let w = w[0];
        let g = p.g.value(&v(&[w])).to_f64();
        if !g.is_finite() {
            return f64::INFINITY;
        }
        let d_hhat = (h(w) - hx - dhx * (w - x)) / gamma - (f(w) - fx - dfx * (w - x));
        f(w) + g + d_hhat + (w - x) * shift
    }
}

const GRID_BOX: (f64, f64) = (-4.0, 4.0);
// a multiple of 8 puts +-1 and +-2 on the grid
const GRID_RES: usize = 8_000;

fn oracle_step(p: &ProblemInstance, params: &PlannedParams, x: f64, xm: f64) -> (f64, f64) {
    let m = grid_argmin(oracle_model(p, params, x, xm), &[GRID_BOX], GRID_RES).expect("grid search");
    (m.point[0], m.value)
}

/// Closed-form subproblem solutions for Euclidean-kernel instances.
fn closed_form<'a>(p: &'a ProblemInstance, params: &PlannedParams) -> Option<impl Fn(f64, f64) -> f64 + 'a> {
    if p.kernel.name() != "euclidean" {
        return None;
    }
    let (gamma, beta) = (params.gamma, params.beta);
    let df = move |t: f64| p.f.gradient(&v(&[t]))[0];
    let soft = |t: f64, s: f64| t.signum() * (t.abs() - s).max(0.0);
    let name = p.name.clone();
    Some(move |x: f64, xm: f64| {
        let t = x - gamma * (2.0 * df(x) - df(xm)) + beta * (x - xm);
        match name.as_str() {
            "counterexample" => {
                // ties go to the point farther from x
                if t > 0.0 || (t == 0.0 && x < 0.0) {
                    1.0
                } else {
                    -1.0
                }
            }
            "nonconvex-qp-l1" => soft(t, gamma * 0.1).clamp(-2.0, 2.0),
            "convex-lasso" => soft(t, gamma * 0.1),
            "concave-box" => t.clamp(-1.0, 1.0),
            _ => t,
        }
    })
}

fn criterion_5() -> Verdict {
    let mut worst_op: f64 = 0.0;
    let mut worst_env: f64 = 0.0;
    let mut worst_closed: f64 = 0.0;
    let mut worst_grid_run: f64 = 0.0;
    let mut fails = Vec::new();
    for p in one_dimensional() {
        let params = auto(&p);
        let mut s = Sampler::new(1, p.sample_radius, 3000);
        for _ in 0..20 {
            let (x, xm) = (s.point(), s.point());
            let lib = frb_operator(&p, &params, &x, &xm).unwrap();
            let lib_value = model_value(&p, &params, &lib, &x, &xm).unwrap().to_f64();
            let (_, oracle_value) = oracle_step(&p, &params, x[0], xm[0]);
            let op_gap = (lib_value - oracle_value).abs();
            let env = envelope_value(&p, &params, &x, &xm).unwrap();
            let reference = reference_envelope(oracle_model(&p, &params, x[0], xm[0]), &[GRID_BOX], GRID_RES).unwrap();
            let env_gap = (env - reference.value).abs();
            worst_op = worst_op.max(op_gap);
            worst_env = worst_env.max(env_gap);
            if !(op_gap <= ORACLE_TOL && env_gap <= ORACLE_TOL) {
                fails.push(format!("{} at ({}, {}): operator {op_gap:.3e}, envelope {env_gap:.3e}", label(&p), x[0], xm[0]));
            }
        }

        let (xm, x0) = random_pair(&p, 3100);
        let out = run(&p, &params, &xm, &x0, &stop(-1.0, 50)).unwrap();
        let (mut a, mut b) = (xm[0], x0[0]);
        let closed = closed_form(&p, &params);
        let mut gap: f64 = 0.0;
        for r in &out.trace {
            let next = match &closed {
                Some(step) => step(b, a),
                None => oracle_step(&p, &params, b, a).0,
            };
            gap = gap.max((r.x[0] - next).abs());
            // follow the library iterates so that errors do not compound
            (a, b) = (b, r.x[0]);
        }
        let tol = if closed.is_some() { CLOSED_FORM_TOL } else { ORACLE_TOL };
        if closed.is_some() {
            worst_closed = worst_closed.max(gap);
        } else {
            worst_grid_run = worst_grid_run.max(gap);
        }
        if !(gap <= tol) {
            fails.push(format!("{}: 50-step iterates differ by {gap:.3e}", label(&p)));
        }
    }
    Verdict::new(
        fails.is_empty(),
        format!(
            "operator values {worst_op:.2e}, envelope {worst_env:.2e}, closed-form iterates {worst_closed:.2e}, grid iterates {worst_grid_run:.2e}{}",
            if fails.is_empty() { String::new() } else { format!("; failures: {}", fails.join("; ")) }
        ),
    )
}

fn random_moduli(rng: &mut ChaCha8Rng) -> NormalizedModuli {
    let l = 10f64.powf(rng.gen_range(-1.0..1.0));
    let other = rng.gen_range(-1.0..1.0);
    let (pf, pmf) = match rng.gen_range(0..4) {
        0 => (-1.0, other),
        1 => (other, -1.0),
        2 => (0.0, -1.0),
        _ => (-1.0, 0.0),
    };
    normalize_moduli(pf * l, pmf * l).unwrap()
}

/// The theorem inequalities, evaluated with the true moduli.
fn theorem_holds(m: &NormalizedModuli, k: KernelModuli, l_f: Option<f64>, p: &PlannedParams) -> Result<(), String> {
    let tol = 1e-9;
    let alpha = p.gamma * m.l_fh;
    if !(1.0 + alpha * m.p_minus_f > 0.0) {
        return Err(format!("prox threshold: alpha {alpha}"));
    }
    if !(p.c > 0.0) {
        return Err(format!("c = {}", p.c));
    }
    match p.xi_regime {
        XiRegime::ConvexReference => {
            if alpha * m.p_f - p.beta < -tol {
                return Err(format!("alpha p_f - beta = {}", alpha * m.p_f - p.beta));
            }
            let bound = 1.0 + 2.0 * p.beta + 3.0 * alpha * m.p_minus_f;
            if p.c > bound + tol {
                return Err(format!("c {} above {bound}", p.c));
            }
        }
        XiRegime::QuadraticReference => {
            let (sh, lh) = (k.sigma_h.unwrap(), k.l_h.unwrap_or(0.0));
            let l_fbeta = match l_f {
                Some(lf) if p.beta == 0.0 => lf,
                _ => lh / p.gamma * (p.beta - alpha * m.p_f).max(-p.beta - alpha * m.p_minus_f).max(0.0),
            };
            let bound = (1.0 + alpha * m.p_minus_f) * sh - 2.0 * p.gamma * l_fbeta;
            if p.c > bound + tol {
                return Err(format!("c {} above {bound}", p.c));
            }
        }
    }
    Ok(())
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut planned = 0;
    let mut corollary_fails = Vec::new();
    let mut agree = 0;
    let mut disagree = Vec::new();
    for _ in 0..10_000 {
        let m = random_moduli(&mut rng);
        let sh = rng.gen_range(0.2..2.0);
        let k = KernelModuli { sigma_h: Some(sh), l_h: Some(sh * rng.gen_range(1.0..3.0)) };
        // L_f for a kernel with these moduli is at most L * L_h
        let l_f = Some(m.l_fh * k.l_h.unwrap());
        let tag = CorollaryTag::COROLLARIES[rng.gen_range(0..CorollaryTag::COROLLARIES.len())];
        let beta = match tag {
            CorollaryTag::WcBzero | CorollaryTag::CvxBzero | CorollaryTag::CcvBzero => 0.0,
            _ => rng.gen_range(-0.6..0.3),
        };
        let c = rng.gen_bool(0.5).then(|| rng.gen_range(0.01..1.5));
        let gamma = rng.gen_bool(0.5).then(|| rng.gen_range(0.001..1.0) / m.l_fh);
        if let Ok(p) = plan_corollary(tag, &m, c, beta, k, l_f, gamma) {
            planned += 1;
            if let Err(e) = theorem_holds(&m, k, l_f, &p) {
                corollary_fails.push(format!("{tag}: {e}"));
            }
        }

        // regime A validation against a direct evaluation
        let beta = rng.gen_range(-1.0..1.0);
        let gamma = rng.gen_range(0.001..3.0) / m.l_fh;
        let alpha = gamma * m.l_fh;
        let margins = [1.0 + alpha * m.p_minus_f, alpha * m.p_f - beta, c_regime_a(&m, beta, alpha)];
        if margins.iter().any(|x| x.abs() < 1e-9) {
            continue;
        }
        let direct = margins.iter().all(|&x| x > 0.0);
        let ok = plan_thm_sd_a(&m, beta, gamma).is_ok();
        if ok == direct {
            agree += 1;
        } else {
            disagree.push(format!("p = ({}, {}), beta {beta}, alpha {alpha}", m.p_f, m.p_minus_f));
        }
    }
    let pass = corollary_fails.is_empty() && disagree.is_empty() && planned > 1000;
    Verdict::new(
        pass,
        format!(
            "{planned} corollary plans all satisfy the theorem: {}; regime-A accept/reject matches direct evaluation on {agree} samples{}",
            corollary_fails.is_empty(),
            if disagree.is_empty() { String::new() } else { format!("; mismatches: {}", disagree.iter().take(3).cloned().collect::<Vec<_>>().join("; ")) }
        ),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a.is_infinite() && a == b) || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn criterion_7() -> Verdict {
    let mut fails = Vec::new();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for p in catalog() {
        let params = auto(&p);
        let mut s = Sampler::new(p.dimension, p.sample_radius, 7000);
        for i in 0..1000 {
            let (x, xm) = if i % 2 == 0 { feasible_pair(&p, &params, &mut s) } else { (s.point(), s.point()) };
            let w = if i % 3 == 0 { frb_operator(&p, &params, &s.point(), &x).unwrap() } else { s.point() };
            let tangent = model_value(&p, &params, &x, &x, &xm).unwrap().to_f64();
            let phi = p.phi(&x).to_f64();
            let ip = model_value(&p, &params, &w, &x, &xm).unwrap().to_f64();
            let md = model_value_md(&p, &params, &w, &x, &xm).unwrap().to_f64();
            count += 1;
            for (a, b, what) in [(tangent, phi, "M(x; x, x-) = phi(x)"), (ip, md, "inner-product form = MD form")] {
                if a.is_finite() {
                    worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
                }
                if !close(a, b, IDENTITY_TOL) {
                    fails.push(format!("{}: {what} ({a} vs {b})", label(&p)));
                }
            }
        }
    }
    Verdict::new(
        fails.is_empty(),
        format!(
            "{count} triples, worst relative gap {worst:.2e}{}",
            if fails.is_empty() { String::new() } else { format!("; failures: {}", fails.iter().take(3).cloned().collect::<Vec<_>>().join("; ")) }
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut fails = Vec::new();
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for p in catalog() {
        let params = auto(&p);
        let mut s = Sampler::new(p.dimension, p.sample_radius, 8000);
        for i in 0..1000 {
            let (x, xm) = if i % 2 == 0 { feasible_pair(&p, &params, &mut s) } else { (s.point(), s.point()) };
            let e = envelope_value(&p, &params, &x, &xm).unwrap();
            let phi = p.phi(&x).to_f64();
            count += 1;
            let margin = phi + ENVELOPE_TOL - e;
            worst = worst.min(margin);
            if !(margin >= 0.0) {
                fails.push(format!("{}: E = {e} above phi = {phi}", label(&p)));
            }
        }
    }
    Verdict::new(
        fails.is_empty(),
        format!(
            "{count} samples, smallest margin phi - E + tol = {worst:.3e}{}",
            if fails.is_empty() { String::new() } else { format!("; failures: {}", fails.iter().take(3).cloned().collect::<Vec<_>>().join("; ")) }
        ),
    )
}

fn criterion_9() -> Verdict {
    let started = Instant::now();
    let cfg = LinesearchConfig::default();
    let mut fails = Vec::new();
    let mut runs = 0;
    let mut worst_slack = f64::INFINITY;
    for p in catalog() {
        let params = auto(&p);
        for seed in 0..3u64 {
            runs += 1;
            let (xm, x0) = random_pair(&p, 9000 + seed);
            let mut provider = BroydenProvider::new(20);
            let out = run_ls(&p, &params, &cfg, &mut provider, &xm, &x0, &stop(EPS_RESIDUAL, 20_000)).unwrap();
            let slack = out.run.trace.iter().filter_map(|r| r.slack_sd).fold(f64::INFINITY, f64::min);
            worst_slack = worst_slack.min(slack);
            if out.fallbacks > 0 || slack < -SLACK_TOL || out.run.status == RunStatus::CertificationFailed {
                fails.push(format!("{} seed {seed}: {} fallbacks, slack {slack:.3e}", label(&p), out.fallbacks));
            }
        }
    }

    // the strongly convex toy: unit steps and superlinear contraction
    let p = build("logcosh-toy", json!({}));
    let params = auto(&p);
    let x0 = v(&[3.0, 3.0]);
    let mut provider = BroydenProvider::new(20);
    let toy = run_ls(&p, &params, &cfg, &mut provider, &x0, &x0, &stop(1e-12, 1000)).unwrap();
    let xstar = p.known_minimizer.clone().expect("toy minimizer");
    let unit = toy.steps.iter().skip(5).all(|s| s.tau == 1.0);
    let dist: Vec<f64> = toy.steps.iter().map(|s| (&s.x - &xstar).norm()).chain(toy.run.last_x().map(|x| (x - &xstar).norm())).collect();
    let ratios: Vec<f64> = dist.windows(2).filter(|w| w[0] > 1e-13).map(|w| w[1] / w[0]).collect();
    let last3: Vec<f64> = ratios.iter().rev().take(3).copied().collect();
    let superlinear = last3.len() == 3 && last3.iter().all(|&r| r < 0.5);
    let elapsed = started.elapsed().as_secs_f64();
    if !unit {
        fails.push("toy: a step after the fifth backtracked".into());
    }
    if !superlinear {
        fails.push(format!("toy: final ratios {last3:?}"));
    }
    Verdict::new(
        fails.is_empty(),
        format!(
            "{runs} Broyden runs, worst slack {worst_slack:.3e}, no fallbacks: {}; toy converged in {} steps, final ratios {:?}; {elapsed:.2}s{}",
            fails.iter().all(|f| !f.contains("fallbacks")),
            toy.run.iterations(),
            last3.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>(),
            if fails.is_empty() { String::new() } else { format!("; failures: {}", fails.join("; ")) }
        ),
    )
}

fn criterion_10() -> Verdict {
    let p = build("convex-quadratic", json!({}));
    let params = auto(&p);
    assert_eq!(params.beta, 0.0);
    let (xm, x0) = random_pair(&p, 10);
    let out = run(&p, &params, &xm, &x0, &stop(1e-13, 10_000)).unwrap();
    let merits: Vec<f64> = out.trace.iter().map(|r| r.merit).collect();
    let report = analyze_merits(&merits, None);
    let linear = match &report {
        Ok(r) => r.regime == bifrb::harness::rates::RateRegime::Linear && r.r_squared > RATE_R2,
        Err(_) => false,
    };

    let mut worst: f64 = 0.0;
    for theta in [0.55, 0.6, 0.75, 0.9] {
        let exponent = exponent_from_theta(theta);
        let merits: Vec<f64> = (0..400).map(|k| if k == 0 { 1.0 } else { (k as f64).powf(exponent) }).collect();
        let back = analyze_merits(&merits, Some(0.0)).ok().and_then(|r| r.theta).unwrap_or(f64::NAN);
        worst = worst.max((back - theta).abs()).max((theta_from_exponent(exponent) - theta).abs());
    }
    let roundtrip = worst <= THETA_TOL;
    Verdict::new(
        linear && roundtrip,
        format!(
            "convex quadratic: {}; synthetic theta recovered within {worst:.2e}",
            match &report {
                Ok(r) => format!("{:?}, R^2 = {:.6}, q = {:?}", r.regime, r.r_squared, r.q),
                Err(e) => format!("error {e}"),
            }
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters pass arguments we do not use
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut verdicts: Vec<(usize, &str, Verdict, f64)> = Vec::new();
    let mut timed = |n: usize, name: &'static str, f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let verdict = f();
        verdicts.push((n, name, verdict, t.elapsed().as_secs_f64()));
    };
    timed(1, "two-point counterexample", &criterion_1);
    let t = Instant::now();
    let (c2, c3) = criteria_2_and_3();
    let shared = t.elapsed().as_secs_f64();
    timed(4, "residual termination", &criterion_4);
    timed(5, "oracle equivalence in one dimension", &criterion_5);
    timed(6, "planner soundness", &criterion_6);
    timed(7, "model identities", &criterion_7);
    timed(8, "envelope below phi", &criterion_8);
    timed(9, "linesearch", &criterion_9);
    timed(10, "rate diagnostics", &criterion_10);
    verdicts.push((2, "merit decrease and value bound", c2, shared));
    verdicts.push((3, "summable Bregman steps", c3, shared));
    verdicts.sort_by_key(|v| v.0);

    let mut failed = 0;
    for (n, name, verdict, secs) in &verdicts {
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        failed += !verdict.pass as usize;
        println!("{tag} criterion {n:>2} ({name}, {secs:.1}s): {}", verdict.detail);
    }
    println!("acceptance: {} of {} criteria pass", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

