//! Envelope `E(x, x-) = inf_w M(w; x, x-)` and the merit function
//! `L = E + (c/2gamma) D(x, x-) + D_xi(x, x-)`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::Result;
use crate::ext::Ext;
use crate::kernel::{FnReference, GeneralizedReference, HalfSquaredNorm, Vector};
use crate::planner::{PlannedParams, XiRegime};
use crate::problem::ProblemInstance;
use crate::solver::{Evaluator, PointData, CERT_SLACK};

/// Merit-function data: the parameters and the choice of `xi` they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct MeritSpec {
    pub params: PlannedParams,
}

impl MeritSpec {
    pub fn new(params: PlannedParams) -> Self {
        MeritSpec { params }
    }

    pub fn regime(&self) -> XiRegime {
        self.params.xi_regime
    }

    /// `D_xi(a, b)` from cached oracle values.
    pub fn xi_divergence(&self, ev: &Evaluator, a: &PointData, b: &PointData) -> f64 {
        let p = &self.params;
        match p.xi_regime {
            XiRegime::ConvexReference => ev.df(a, b) - p.beta / p.gamma * ev.dh(a, b),
            XiRegime::QuadraticReference => 0.5 * p.l_fbeta.unwrap_or(0.0) * (&a.x - &b.x).norm_squared(),
        }
    }

    /// `xi` as a stand-alone reference function.
    pub fn xi_reference<'a>(&self, problem: &'a ProblemInstance) -> Box<dyn GeneralizedReference + 'a> {
        let p = self.params.clone();
        match p.xi_regime {
            XiRegime::ConvexReference => {
                let s = p.beta / p.gamma;
                let (pv, pg) = (problem, problem);
                Box::new(FnReference {
                    value: move |x: &Vector| pv.f.value(x) - s * pv.kernel.value(x).to_f64(),
                    gradient: move |x: &Vector| pg.f.gradient(x) - pg.kernel.gradient(x) * s,
                })
            }
            XiRegime::QuadraticReference => {
                let l = p.l_fbeta.unwrap_or(0.0);
                Box::new(FnReference {
                    value: move |x: &Vector| l * HalfSquaredNorm.value(x),
                    gradient: move |x: &Vector| x * l,
                })
            }
        }
    }
}

/// The three summands of the merit at `(x, x-)`, given `xbar in T(x, x-)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritParts {
    pub envelope: Ext,
    pub distance_term: f64,
    pub xi_term: f64,
}

impl MeritParts {
    pub fn total(&self) -> f64 {
        (self.envelope + self.distance_term + self.xi_term).to_f64()
    }
}

pub(crate) fn merit_parts(ev: &Evaluator, spec: &MeritSpec, xbar: &PointData, x: &PointData, xm: &PointData) -> MeritParts {
    let p = &spec.params;
    MeritParts {
        envelope: ev.model(xbar, x, xm),
        distance_term: p.c / (2.0 * p.gamma) * ev.dh(x, xm),
        xi_term: spec.xi_divergence(ev, x, xm),
    }
}

/// Signed slacks of the two decrease inequalities; nonnegative means the
/// inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub ok: bool,
    /// `L(x, x-) - (c/2gamma)(D(xbar, x) + D(x, x-)) - L(xbar, x)`.
    pub slack_sd: f64,
    /// `L(x, x-) - (c/gamma) D(xbar, x) - (c/2gamma) D(x, x-) - phi(xbar)`.
    pub slack_lgeq: f64,
}

pub(crate) fn certificate(p: &PlannedParams, merit: f64, merit_next: f64, phi_next: Ext, d_next: f64, d_cur: f64) -> Certificate {
    let k = p.c / (2.0 * p.gamma);
    let slack_sd = merit - k * (d_next + d_cur) - merit_next;
    let slack_lgeq = match phi_next {
        Ext::Finite(v) => merit - 2.0 * k * d_next - k * d_cur - v,
        _ => f64::NEG_INFINITY,
    };
    let ok = slack_sd >= -CERT_SLACK && slack_lgeq >= -CERT_SLACK;
    Certificate { ok, slack_sd, slack_lgeq }
}

/// `E(x, x-)`, evaluated as `M(xbar; x, x-)` for `xbar in T(x, x-)`.
pub fn envelope_value(p: &ProblemInstance, params: &PlannedParams, x: &Vector, x_minus: &Vector) -> Result<f64> {
    let ev = Evaluator::new(p, params);
    let (xd, xmd) = (ev.point(x)?, ev.point(x_minus)?);
    let xbar = ev.operator(&xd, &xmd)?;
    Ok(ev.model(&xbar, &xd, &xmd).to_f64())
}

/// `L(x, x-)` with one subproblem solve.
pub fn merit_value(p: &ProblemInstance, spec: &MeritSpec, x: &Vector, x_minus: &Vector) -> Result<f64> {
    let ev = Evaluator::new(p, &spec.params);
    let (xd, xmd) = (ev.point(x)?, ev.point(x_minus)?);
    let xbar = ev.operator(&xd, &xmd)?;
    Ok(merit_parts(&ev, spec, &xbar, &xd, &xmd).total())
}

/// `L(x, x-)` reusing a known `x_next in T(x, x-)`; no subproblem solve.
pub fn merit_along_trajectory(p: &ProblemInstance, spec: &MeritSpec, x_next: &Vector, x: &Vector, x_minus: &Vector) -> Result<f64> {
    let ev = Evaluator::new(p, &spec.params);
    Ok(merit_parts(&ev, spec, &ev.point(x_next)?, &ev.point(x)?, &ev.point(x_minus)?).total())
}

/// Check both decrease inequalities for the step `x_next in T(x, x-)`,
/// given `prev_merit = L(x, x-)`.
pub fn certify_decrease(
    p: &ProblemInstance,
    spec: &MeritSpec,
    x_next: &Vector,
    x: &Vector,
    x_minus: &Vector,
    prev_merit: f64,
) -> Result<Certificate> {
    let ev = Evaluator::new(p, &spec.params);
    let (xn, xd, xmd) = (ev.point(x_next)?, ev.point(x)?, ev.point(x_minus)?);
    let xnn = ev.operator(&xn, &xd)?;
    let merit_next = merit_parts(&ev, spec, &xnn, &xn, &xd).total();
    Ok(certificate(&spec.params, prev_merit, merit_next, ev.phi(&xn), ev.dh(&xn, &xd), ev.dh(&xd, &xmd)))
}

/// `F(w, x, x-) = M(w; x, x-) + (c/2gamma) D(x, x-) + D_xi(x, x-)`.
pub fn product_space_f(p: &ProblemInstance, spec: &MeritSpec, w: &Vector, x: &Vector, x_minus: &Vector) -> Result<Ext> {
    if !p.kernel.in_domain(w) {
        return Ok(Ext::PosInf);
    }
    let ev = Evaluator::new(p, &spec.params);
    let parts = merit_parts(&ev, spec, &ev.point(w)?, &ev.point(x)?, &ev.point(x_minus)?);
    Ok(parts.envelope + parts.distance_term + parts.xi_term)
}

fn key(x: &Vector, xm: &Vector) -> Vec<u64> {
    x.iter().chain(xm.iter()).map(|v| v.to_bits()).collect()
}

/// Memoized `(xbar, merit parts)` by exact `(x, x-)` bit pattern.
#[derive(Default)]
pub struct EnvelopeCache {
    map: HashMap<Vec<u64>, (PointData, MeritParts)>,
    pub hits: usize,
    pub misses: usize,
}

impl EnvelopeCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// `xbar in T(x, x-)` and the merit parts at `(x, x-)`.
    pub fn get(&mut self, ev: &Evaluator, spec: &MeritSpec, x: &PointData, xm: &PointData) -> Result<(PointData, MeritParts)> {
        let k = key(&x.x, &xm.x);
        if let Some(hit) = self.map.get(&k) {
            self.hits += 1;
            return Ok(hit.clone());
        }
        self.misses += 1;
        let xbar = ev.operator(x, xm)?;
        let parts = merit_parts(ev, spec, &xbar, x, xm);
        self.map.insert(k, (xbar.clone(), parts));
        Ok((xbar, parts))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan, PlanMode, PlanRequest};
    use crate::problem::instances;
    use crate::solver::frb_operator;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn forward_backward_envelope_on_smooth_euclidean() {
        // with g = 0 and x- = x the model is a proximal linearization
        let p = instances::build("logcosh-toy", &serde_json::Value::Null).unwrap();
        let params = plan(&p, &PlanRequest::default()).unwrap();
        let x = v(&[0.7, -1.2]);
        let g = p.f.gradient(&x);
        let expected = p.f.value(&x) - 0.5 * params.gamma * g.norm_squared();
        let e = envelope_value(&p, &params, &x, &x).unwrap();
        assert!((e - expected).abs() < 1e-12, "{e} vs {expected}");
    }

    #[test]
    fn envelope_sits_below_phi() {
        let p = instances::quartic1d().unwrap();
        let params = plan(&p, &PlanRequest::default()).unwrap();
        for (x, xm) in [(0.3, -0.4), (1.7, 1.0), (-2.0, 0.5)] {
            let e = envelope_value(&p, &params, &v(&[x]), &v(&[xm])).unwrap();
            assert!(e <= p.phi(&v(&[x])).to_f64() + 1e-12);
        }
    }

    #[test]
    fn merit_paths_agree_and_cache_hits() {
        let p = instances::build("convex-lasso", &serde_json::Value::Null).unwrap();
        let params = plan(&p, &PlanRequest { mode: PlanMode::ThmSdB, ..Default::default() }).unwrap();
        let spec = MeritSpec::new(params.clone());
        let (x, xm) = (v(&[0.4, -0.3]), v(&[1.0, 0.2]));
        let xbar = frb_operator(&p, &params, &x, &xm).unwrap();
        let direct = merit_value(&p, &spec, &x, &xm).unwrap();
        let along = merit_along_trajectory(&p, &spec, &xbar, &x, &xm).unwrap();
        assert_eq!(direct, along);
        let f = product_space_f(&p, &spec, &xbar, &x, &xm).unwrap().to_f64();
        assert!((f - direct).abs() < 1e-12);

        let ev = Evaluator::new(&p, &params);
        let mut cache = EnvelopeCache::new();
        let (xd, xmd) = (ev.point(&x).unwrap(), ev.point(&xm).unwrap());
        let (a, pa) = cache.get(&ev, &spec, &xd, &xmd).unwrap();
        let (b, pb) = cache.get(&ev, &spec, &xd, &xmd).unwrap();
        assert_eq!((a.x, pa), (b.x, pb));
        assert_eq!((cache.hits, cache.misses, cache.len()), (1, 1, 1));
        assert_eq!(pa.total(), direct);
    }

    #[test]
    fn certified_step_passes_both_inequalities() {
        let p = instances::build("nonconvex-qp-l1", &serde_json::Value::Null).unwrap();
        let params = plan(&p, &PlanRequest::default()).unwrap();
        let spec = MeritSpec::new(params.clone());
        let (x, xm) = (v(&[1.5, -1.0]), v(&[-0.5, 0.25]));
        let prev = merit_value(&p, &spec, &x, &xm).unwrap();
        let next = frb_operator(&p, &params, &x, &xm).unwrap();
        let cert = certify_decrease(&p, &spec, &next, &x, &xm, prev).unwrap();
        assert!(cert.ok, "{cert:?}");
    }

    #[test]
    fn quadratic_xi_regime_uses_the_lipschitz_modulus() {
        let p = instances::build("convex-quadratic", &serde_json::Value::Null).unwrap();
        let params = plan(&p, &PlanRequest { mode: PlanMode::ThmSdB, ..Default::default() }).unwrap();
        let spec = MeritSpec::new(params.clone());
        assert_eq!(spec.regime(), XiRegime::QuadraticReference);
        let xi = spec.xi_reference(&p);
        let x = v(&[1.0, 2.0]);
        assert!((xi.value(&x) - 2.5 * params.l_fbeta.unwrap()).abs() < 1e-12);
    }
}
