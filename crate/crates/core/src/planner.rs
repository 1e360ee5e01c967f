//! Stepsize, inertia and merit-constant planning.
//!
//! Every plan is expressed in the normalized quantities `alpha = gamma L`
//! and `p_{+-f} = sigma_{+-f} / L`, where `L = max |sigma|`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::problem::{prox_threshold, ProblemInstance};

/// Relative slack used when checking non-strict inequalities, so that a
/// stepsize computed from a closed-form bound passes its own validation.
pub const PLAN_TOL: f64 = 1e-12;

/// A named inequality that failed, with both sides evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails ({} vs {})", self.condition, self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("f is affine: both relative moduli are zero")]
    Affine,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("{}", join(.0))]
    Violations(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl PlanError {
    /// Names of the violated conditions, empty for other errors.
    pub fn conditions(&self) -> Vec<&str> {
        match self {
            PlanError::Violations(v) => v.iter().map(|x| x.condition.as_str()).collect(),
            _ => vec![],
        }
    }
}

type PlanResult<T> = std::result::Result<T, PlanError>;

/// Relative moduli in normalized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedModuli {
    pub l_fh: f64,
    pub p_f: f64,
    pub p_minus_f: f64,
    /// Set when the inputs violated `sigma_f + sigma_minus_f <= 0` and the
    /// larger one was lowered.
    pub adjusted: bool,
    /// The moduli as supplied.
    pub sigma_f: f64,
    pub sigma_minus_f: f64,
}

impl NormalizedModuli {
    /// Same `L`, with `p` replaced by a coarser pair (used by corollaries).
    pub fn relaxed(&self, p_f: f64, p_minus_f: f64) -> Self {
        NormalizedModuli { p_f, p_minus_f, ..*self }
    }

    pub fn as_tuple(&self) -> (f64, f64, f64) {
        (self.l_fh, self.p_f, self.p_minus_f)
    }
}

/// `L = max(|sigma_f|, |sigma_minus_f|)`, `p = sigma / L`.
///
/// Valid moduli satisfy `sigma_f + sigma_minus_f <= 0`; otherwise the
/// larger one is lowered to minus the other and the adjustment is logged.
pub fn normalize_moduli(sigma_f: f64, sigma_minus_f: f64) -> PlanResult<NormalizedModuli> {
    if !sigma_f.is_finite() || !sigma_minus_f.is_finite() {
        return Err(PlanError::Invalid(format!("non-finite moduli ({sigma_f}, {sigma_minus_f})")));
    }
    if sigma_f == 0.0 && sigma_minus_f == 0.0 {
        return Err(PlanError::Affine);
    }
    let (mut sf, mut smf) = (sigma_f, sigma_minus_f);
    let adjusted = sf + smf > 0.0;
    if adjusted {
        if sf >= smf {
            sf = -smf;
        } else {
            smf = -sf;
        }
        log::warn!("moduli ({sigma_f}, {sigma_minus_f}) sum to a positive number; using ({sf}, {smf})");
    }
    let l = sf.abs().max(smf.abs());
    if l == 0.0 {
        return Err(PlanError::Affine);
    }
    let (p_f, p_minus_f) = (sf / l, smf / l);
    debug_assert!(p_f.min(p_minus_f) == -1.0);
    Ok(NormalizedModuli { l_fh: l, p_f, p_minus_f, adjusted, sigma_f, sigma_minus_f })
}

/// Kernel moduli needed by the strongly-convex regime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelModuli {
    pub sigma_h: Option<f64>,
    pub l_h: Option<f64>,
}

/// Which reference `xi` enters the merit function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum XiRegime {
    /// `xi = f - (beta/gamma) h`, convex.
    ConvexReference,
    /// `xi = L_fbeta * 1/2 |.|^2`.
    QuadraticReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorollaryTag {
    #[serde(rename = "ThmSD_A")]
    ThmSdA,
    #[serde(rename = "ThmSD_B")]
    ThmSdB,
    #[serde(rename = "WC_A")]
    WcA,
    #[serde(rename = "WC_B")]
    WcB,
    #[serde(rename = "WC_Bzero")]
    WcBzero,
    #[serde(rename = "CVX_A")]
    CvxA,
    #[serde(rename = "CVX_B")]
    CvxB,
    #[serde(rename = "CVX_Bzero")]
    CvxBzero,
    #[serde(rename = "CCV_A")]
    CcvA,
    #[serde(rename = "CCV_B")]
    CcvB,
    #[serde(rename = "CCV_Bzero")]
    CcvBzero,
    Manual,
}

impl CorollaryTag {
    pub const COROLLARIES: [CorollaryTag; 9] = [
        CorollaryTag::WcA,
        CorollaryTag::WcB,
        CorollaryTag::WcBzero,
        CorollaryTag::CvxA,
        CorollaryTag::CvxB,
        CorollaryTag::CvxBzero,
        CorollaryTag::CcvA,
        CorollaryTag::CcvB,
        CorollaryTag::CcvBzero,
    ];

    pub fn regime(self) -> Option<XiRegime> {
        use CorollaryTag::*;
        match self {
            ThmSdA | WcA | CvxA | CcvA => Some(XiRegime::ConvexReference),
            ThmSdB | WcB | WcBzero | CvxB | CvxBzero | CcvB | CcvBzero => Some(XiRegime::QuadraticReference),
            Manual => None,
        }
    }

    /// The coarse `p` pair a corollary assumes.
    pub fn assumed_p(self) -> Option<(f64, f64)> {
        use CorollaryTag::*;
        match self {
            WcA | WcB | WcBzero => Some((-1.0, -1.0)),
            CvxA | CvxB | CvxBzero => Some((0.0, -1.0)),
            CcvA | CcvB | CcvBzero => Some((-1.0, 0.0)),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        use CorollaryTag::*;
        match self {
            ThmSdA => "ThmSD_A",
            ThmSdB => "ThmSD_B",
            WcA => "WC_A",
            WcB => "WC_B",
            WcBzero => "WC_Bzero",
            CvxA => "CVX_A",
            CvxB => "CVX_B",
            CvxBzero => "CVX_Bzero",
            CcvA => "CCV_A",
            CcvB => "CCV_B",
            CcvBzero => "CCV_Bzero",
            Manual => "Manual",
        }
    }
}

impl fmt::Display for CorollaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

/// Validated algorithm parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedParams {
    pub gamma: f64,
    pub beta: f64,
    /// Merit constant used for certification.
    pub c: f64,
    pub alpha: f64,
    pub l_fh: f64,
    pub p_f: f64,
    pub p_minus_f: f64,
    pub xi_regime: XiRegime,
    pub l_fbeta: Option<f64>,
    pub corollary_tag: CorollaryTag,
    pub certified: bool,
    /// Corollary bound the stepsize was checked against.
    pub gamma_max: Option<f64>,
    /// Set when `gamma >= 1/[sigma_f]_-`, the alternative envelope threshold.
    pub envelope_threshold_warning: bool,
    pub moduli_adjusted: bool,
}

fn violation(condition: &str, lhs: f64, rhs: f64) -> Violation {
    Violation { condition: condition.to_string(), lhs, rhs }
}

fn ge_tol(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - PLAN_TOL * (1.0 + lhs.abs().max(rhs.abs()))
}

fn prox_violation(m: &NormalizedModuli, alpha: f64) -> Option<Violation> {
    // gamma < 1/[sigma_minus_f]_-  <=>  1 + alpha p_minus_f > 0
    let lhs = 1.0 + alpha * m.p_minus_f;
    (lhs <= 0.0).then(|| violation("gamma < 1/[sigma_minus_f]_-", lhs, 0.0))
}

fn check_gamma(gamma: f64) -> PlanResult<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(PlanError::Invalid(format!("gamma must be positive and finite, got {gamma}")))
    }
}

fn envelope_warning(m: &NormalizedModuli, gamma: f64) -> bool {
    let neg = (-m.sigma_f).max(0.0);
    let warn = neg > 0.0 && gamma >= 1.0 / neg;
    if warn {
        log::warn!("gamma = {gamma} is not below 1/[sigma_f]_- = {}; the envelope is still evaluated", 1.0 / neg);
    }
    warn
}

/// Regime-A constant `1 + 2 beta + 3 alpha p_minus_f`.
pub fn c_regime_a(m: &NormalizedModuli, beta: f64, alpha: f64) -> f64 {
    1.0 + 2.0 * beta + 3.0 * alpha * m.p_minus_f
}

/// Regime-B constant `(1 + alpha p_minus_f) sigma_h - 2 gamma L_fbeta`.
pub fn c_regime_b(m: &NormalizedModuli, gamma: f64, sigma_h: f64, l_fbeta: f64) -> f64 {
    (1.0 + gamma * m.l_fh * m.p_minus_f) * sigma_h - 2.0 * gamma * l_fbeta
}

/// Validate regime A: `f - (beta/gamma) h` convex, the inertia lower bound,
/// and the prox threshold. `c` is the theorem's value.
pub fn plan_thm_sd_a(m: &NormalizedModuli, beta: f64, gamma: f64) -> PlanResult<PlannedParams> {
    check_gamma(gamma)?;
    let alpha = gamma * m.l_fh;
    let mut bad = Vec::new();
    bad.extend(prox_violation(m, alpha));
    if !ge_tol(alpha * m.p_f - beta, 0.0) {
        bad.push(violation("alpha*p_f - beta >= 0", alpha * m.p_f - beta, 0.0));
    }
    let lower = -(1.0 + 3.0 * alpha * m.p_minus_f) / 2.0;
    if !(beta > lower) {
        bad.push(violation("beta > -(1 + 3*alpha*p_minus_f)/2", beta, lower));
    }
    let c = c_regime_a(m, beta, alpha);
    if !(c > 0.0) {
        bad.push(violation("c = 1 + 2*beta + 3*alpha*p_minus_f > 0", c, 0.0));
    }
    if !bad.is_empty() {
        return Err(PlanError::Violations(bad));
    }
    Ok(PlannedParams {
        gamma,
        beta,
        c,
        alpha,
        l_fh: m.l_fh,
        p_f: m.p_f,
        p_minus_f: m.p_minus_f,
        xi_regime: XiRegime::ConvexReference,
        l_fbeta: None,
        corollary_tag: CorollaryTag::ThmSdA,
        certified: true,
        gamma_max: None,
        envelope_threshold_warning: envelope_warning(m, gamma),
        moduli_adjusted: m.adjusted,
    })
}

/// Validate regime B for a given Lipschitz modulus of `grad f_beta`.
pub fn plan_thm_sd_b(m: &NormalizedModuli, beta: f64, gamma: f64, sigma_h: f64, l_fbeta: f64) -> PlanResult<PlannedParams> {
    check_gamma(gamma)?;
    if !(sigma_h > 0.0) {
        return Err(PlanError::Invalid(format!("sigma_h must be positive, got {sigma_h}")));
    }
    if !(l_fbeta >= 0.0) {
        return Err(PlanError::Invalid(format!("L_fbeta must be nonnegative, got {l_fbeta}")));
    }
    let alpha = gamma * m.l_fh;
    let mut bad = Vec::new();
    bad.extend(prox_violation(m, alpha));
    let c = c_regime_b(m, gamma, sigma_h, l_fbeta);
    if !(c > 0.0) {
        bad.push(violation("c = (1 + alpha*p_minus_f)*sigma_h - 2*gamma*L_fbeta > 0", c, 0.0));
    }
    if !bad.is_empty() {
        return Err(PlanError::Violations(bad));
    }
    Ok(PlannedParams {
        gamma,
        beta,
        c,
        alpha,
        l_fh: m.l_fh,
        p_f: m.p_f,
        p_minus_f: m.p_minus_f,
        xi_regime: XiRegime::QuadraticReference,
        l_fbeta: Some(l_fbeta),
        corollary_tag: CorollaryTag::ThmSdB,
        certified: true,
        gamma_max: None,
        envelope_threshold_warning: envelope_warning(m, gamma),
        moduli_adjusted: m.adjusted,
    })
}

/// Lipschitz modulus of `grad(f - (beta/gamma) h)`.
///
/// With `beta = 0` and a known `L_f` this is `L_f`; otherwise
/// `(L_h/gamma) max(beta - alpha p_f, -beta - alpha p_minus_f)`, clipped at 0.
pub fn estimate_l_fbeta(m: &NormalizedModuli, beta: f64, gamma: f64, l_h: Option<f64>, l_f: Option<f64>) -> PlanResult<f64> {
    check_gamma(gamma)?;
    if beta == 0.0 {
        if let Some(lf) = l_f {
            return Ok(lf);
        }
    }
    let l_h = l_h.ok_or(PlanError::Missing("kernel gradient Lipschitz modulus L_h"))?;
    let alpha = gamma * m.l_fh;
    let s = (beta - alpha * m.p_f).max(-beta - alpha * m.p_minus_f).max(0.0);
    Ok(l_h / gamma * s)
}

fn need(v: Option<f64>, what: &'static str) -> PlanResult<f64> {
    v.ok_or(PlanError::Missing(what))
}

fn range_check(ok: bool, condition: &str, beta: f64, bound: f64) -> PlanResult<()> {
    if ok {
        Ok(())
    } else {
        Err(PlanError::Violations(vec![violation(condition, beta, bound)]))
    }
}

/// Largest stepsize admitted by a corollary, after checking its range on
/// `beta` and `c`.
pub fn gamma_max(tag: CorollaryTag, l: f64, c: f64, beta: f64, k: KernelModuli, l_f: Option<f64>) -> PlanResult<f64> {
    use CorollaryTag::*;
    if !(l > 0.0) {
        return Err(PlanError::Invalid(format!("L_fh must be positive, got {l}")));
    }
    if !(c > 0.0) {
        return Err(PlanError::Invalid(format!("c must be positive, got {c}")));
    }
    let g = match tag {
        WcA => {
            range_check(-0.5 < beta && beta < 0.0, "-1/2 < beta < 0", beta, 0.0)?;
            (-beta).min((1.0 + 2.0 * beta - c) / 3.0) / l
        }
        WcB => {
            let (sh, lh) = (need(k.sigma_h, "sigma_h")?, need(k.l_h, "L_h")?);
            range_check(beta.abs() < sh / (2.0 * lh), "|beta| < sigma_h/(2 L_h)", beta, sh / (2.0 * lh))?;
            (sh - 2.0 * lh * beta.abs() - c) / (sh + 2.0 * lh) / l
        }
        WcBzero | CvxBzero => {
            range_check(beta == 0.0, "beta = 0", beta, 0.0)?;
            let sh = need(k.sigma_h, "sigma_h")?;
            match (tag, k.l_h) {
                (WcBzero, Some(lh)) => (sh - c) / (sh + 2.0 * lh) / l,
                _ => (sh - c) / (sh * l + 2.0 * need(l_f, "L_f")?),
            }
        }
        CvxA => {
            range_check(-0.5 < beta && beta <= 0.0, "-1/2 < beta <= 0", beta, 0.0)?;
            (1.0 + 2.0 * beta - c) / 3.0 / l
        }
        CvxB => {
            let (sh, lh) = (need(k.sigma_h, "sigma_h")?, need(k.l_h, "L_h")?);
            range_check(beta.abs() < sh / (2.0 * lh), "|beta| < sigma_h/(2 L_h)", beta, sh / (2.0 * lh))?;
            let a = (sh + 2.0 * lh * beta - c) / (sh + 2.0 * lh);
            let b = (sh - 2.0 * lh * beta - c) / sh;
            a.min(b) / l
        }
        CcvA => {
            range_check((c - 1.0) / 2.0 <= beta && beta < 0.0, "(c-1)/2 <= beta < 0", beta, (c - 1.0) / 2.0)?;
            -beta / l
        }
        CcvB => {
            let (sh, lh) = (need(k.sigma_h, "sigma_h")?, need(k.l_h, "L_h")?);
            let lo = (c - sh) / (2.0 * lh);
            let hi = sh / (2.0 * lh);
            range_check(lo <= beta && beta < hi, "(c - sigma_h)/(2 L_h) <= beta < sigma_h/(2 L_h)", beta, lo)?;
            (sh - 2.0 * lh * beta - c) / (2.0 * lh) / l
        }
        CcvBzero => {
            range_check(beta == 0.0, "beta = 0", beta, 0.0)?;
            (need(k.sigma_h, "sigma_h")? - c) / (2.0 * need(l_f, "L_f")?)
        }
        ThmSdA | ThmSdB | Manual => {
            return Err(PlanError::Invalid(format!("{tag} is not a corollary")));
        }
    };
    if g > 0.0 {
        Ok(g)
    } else {
        Err(PlanError::Violations(vec![violation("gamma_max > 0", g, 0.0)]))
    }
}

/// Half the supremum of admissible `c` at this `beta`: the default when the
/// user gives none.
pub fn default_c(tag: CorollaryTag, beta: f64, k: KernelModuli) -> PlanResult<f64> {
    use CorollaryTag::*;
    let sup = match tag {
        ThmSdA | WcA | CvxA | CcvA => 1.0 + 2.0 * beta,
        WcB | CvxB | CcvB | ThmSdB => {
            let (sh, lh) = (need(k.sigma_h, "sigma_h")?, k.l_h.unwrap_or(0.0));
            sh - 2.0 * lh * beta.abs()
        }
        WcBzero | CvxBzero | CcvBzero => need(k.sigma_h, "sigma_h")?,
        Manual => return Err(PlanError::Invalid("manual mode has no admissible range".into())),
    };
    if sup > 0.0 {
        Ok(0.5 * sup)
    } else {
        Err(PlanError::Violations(vec![violation("sup admissible c > 0", sup, 0.0)]))
    }
}

fn curvature_check(tag: CorollaryTag, m: &NormalizedModuli) -> PlanResult<()> {
    use CorollaryTag::*;
    match tag {
        CvxA | CvxB | CvxBzero if m.p_f < 0.0 => {
            Err(PlanError::Violations(vec![violation("f convex (sigma_f >= 0)", m.p_f, 0.0)]))
        }
        CcvA | CcvB | CcvBzero if m.p_minus_f < 0.0 => {
            Err(PlanError::Violations(vec![violation("f concave (sigma_minus_f >= 0)", m.p_minus_f, 0.0)]))
        }
        _ => Ok(()),
    }
}

/// Plan from a corollary: compute `gamma_max`, take `gamma` (default
/// `gamma_max`, otherwise required `<= gamma_max`), and validate against
/// the theorem with the corollary's coarse `p`.
pub fn plan_corollary(
    tag: CorollaryTag,
    m: &NormalizedModuli,
    c: Option<f64>,
    beta: f64,
    k: KernelModuli,
    l_f: Option<f64>,
    gamma: Option<f64>,
) -> PlanResult<PlannedParams> {
    curvature_check(tag, m)?;
    let (pf, pmf) = tag.assumed_p().ok_or_else(|| PlanError::Invalid(format!("{tag} is not a corollary")))?;
    let c = match c {
        Some(c) => c,
        None => default_c(tag, beta, k)?,
    };
    let gmax = gamma_max(tag, m.l_fh, c, beta, k, l_f)?;
    let gamma = gamma.unwrap_or(gmax);
    if !ge_tol(gmax, gamma) {
        return Err(PlanError::Violations(vec![violation("gamma <= gamma_max", gamma, gmax)]));
    }
    let relaxed = m.relaxed(pf, pmf);
    let mut params = match tag.regime() {
        Some(XiRegime::ConvexReference) => plan_thm_sd_a(&relaxed, beta, gamma)?,
        _ => {
            let sh = need(k.sigma_h, "sigma_h")?;
            let l_fbeta = match tag {
                CorollaryTag::WcBzero | CorollaryTag::CvxBzero | CorollaryTag::CcvBzero => need(l_f, "L_f")?,
                _ => estimate_l_fbeta(&relaxed, beta, gamma, k.l_h, None)?,
            };
            plan_thm_sd_b(&relaxed, beta, gamma, sh, l_fbeta)?
        }
    };
    if !ge_tol(params.c, c) {
        return Err(PlanError::Violations(vec![violation("theorem c >= requested c", params.c, c)]));
    }
    params.c = c;
    params.corollary_tag = tag;
    params.gamma_max = Some(gmax);
    params.moduli_adjusted = m.adjusted;
    Ok(params)
}

/// Inertia that maximizes the regime-A stepsize when `c` is half its
/// supremum.
pub fn default_beta_a(m: &NormalizedModuli) -> f64 {
    if m.p_f >= 0.0 {
        0.0
    } else if m.p_minus_f == 0.0 {
        -0.25
    } else {
        -m.p_f.abs() / (6.0 * m.p_minus_f.abs() + 2.0 * m.p_f.abs())
    }
}

/// Regime A with the largest stepsize whose theorem constant reaches `c`.
pub fn plan_thm_sd_a_auto(m: &NormalizedModuli, beta: Option<f64>, c: Option<f64>) -> PlanResult<PlannedParams> {
    let beta = beta.unwrap_or_else(|| default_beta_a(m));
    let c = match c {
        Some(c) => c,
        None => default_c(CorollaryTag::ThmSdA, beta, KernelModuli::default())?,
    };
    let mut hi = f64::INFINITY;
    let mut lo = 0.0f64;
    if m.p_f < 0.0 {
        hi = hi.min(beta / m.p_f);
    } else if m.p_f > 0.0 {
        lo = lo.max(beta / m.p_f);
    } else if beta > 0.0 {
        return Err(PlanError::Violations(vec![violation("alpha*p_f - beta >= 0", -beta, 0.0)]));
    }
    if m.p_minus_f < 0.0 {
        hi = hi.min((1.0 + 2.0 * beta - c) / (3.0 * m.p_minus_f.abs()));
    } else if 1.0 + 2.0 * beta < c {
        return Err(PlanError::Violations(vec![violation("1 + 2*beta >= c", 1.0 + 2.0 * beta, c)]));
    }
    if !hi.is_finite() || hi <= 0.0 || hi < lo {
        return Err(PlanError::Violations(vec![violation("nonempty alpha interval", lo, hi)]));
    }
    plan_thm_sd_a(m, beta, hi / m.l_fh)
}

/// Regime B with the largest stepsize whose theorem constant reaches `c`,
/// found by a grid scan and bisection on `alpha`.
pub fn plan_thm_sd_b_auto(
    m: &NormalizedModuli,
    beta: Option<f64>,
    c: Option<f64>,
    k: KernelModuli,
    l_f: Option<f64>,
) -> PlanResult<PlannedParams> {
    let beta = beta.unwrap_or(0.0);
    let sh = need(k.sigma_h, "sigma_h")?;
    let c = match c {
        Some(c) => c,
        None => default_c(CorollaryTag::ThmSdB, beta, k)?,
    };
    let c_at = |alpha: f64| -> Option<f64> {
        let gamma = alpha / m.l_fh;
        let lfb = estimate_l_fbeta(m, beta, gamma, k.l_h, l_f).ok()?;
        Some(c_regime_b(m, gamma, sh, lfb))
    };
    let cap = if m.p_minus_f < 0.0 { 1.0 / m.p_minus_f.abs() } else { 1.0 + sh + beta.abs() };
    const GRID: usize = 4096;
    let mut best = None;
    for i in (1..GRID).rev() {
        let a = cap * i as f64 / GRID as f64;
        match c_at(a) {
            Some(v) if v >= c => {
                best = Some(a);
                break;
            }
            None => return Err(PlanError::Missing("kernel gradient Lipschitz modulus L_h")),
            _ => {}
        }
    }
    let mut lo = best.ok_or_else(|| PlanError::Violations(vec![violation("theorem c >= requested c for some gamma", 0.0, c)]))?;
    let mut hi = (lo + cap / GRID as f64).min(cap * (1.0 - f64::EPSILON));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if c_at(mid).is_some_and(|v| v >= c) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma = lo / m.l_fh;
    let lfb = estimate_l_fbeta(m, beta, gamma, k.l_h, l_f)?;
    plan_thm_sd_b(m, beta, gamma, sh, lfb)
}

/// Unvalidated parameters. `c` defaults to the regime-A formula when that
/// is positive and to 0.01 otherwise; certification is disabled.
pub fn plan_manual(m: &NormalizedModuli, gamma: f64, beta: f64, c: Option<f64>, k: KernelModuli, l_f: Option<f64>) -> PlanResult<PlannedParams> {
    check_gamma(gamma)?;
    let alpha = gamma * m.l_fh;
    let convex_ref = alpha * m.p_f - beta >= 0.0;
    let l_fbeta = estimate_l_fbeta(m, beta, gamma, k.l_h, l_f).ok();
    let xi_regime = if convex_ref || l_fbeta.is_none() { XiRegime::ConvexReference } else { XiRegime::QuadraticReference };
    let c = c.unwrap_or_else(|| {
        let ca = c_regime_a(m, beta, alpha);
        if ca > 0.0 {
            ca
        } else {
            0.01
        }
    });
    if prox_violation(m, alpha).is_some() {
        log::warn!("manual gamma = {gamma} is not below the prox threshold {}", prox_threshold(m.sigma_minus_f));
    }
    Ok(PlannedParams {
        gamma,
        beta,
        c,
        alpha,
        l_fh: m.l_fh,
        p_f: m.p_f,
        p_minus_f: m.p_minus_f,
        xi_regime,
        l_fbeta,
        corollary_tag: CorollaryTag::Manual,
        certified: false,
        gamma_max: None,
        envelope_threshold_warning: envelope_warning(m, gamma),
        moduli_adjusted: m.adjusted,
    })
}

/// Planner mode as named in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlanMode {
    /// Regime A at its default inertia, falling back to regime B.
    #[default]
    Auto,
    ThmSdA,
    ThmSdB,
    Corollary(CorollaryTag),
    Manual,
}

impl FromStr for PlanMode {
    type Err = PlanError;

    fn from_str(s: &str) -> PlanResult<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        let mode = match key.as_str() {
            "auto" => PlanMode::Auto,
            "thmsda" | "sda" => PlanMode::ThmSdA,
            "thmsdb" | "sdb" => PlanMode::ThmSdB,
            "manual" => PlanMode::Manual,
            other => {
                let tag = CorollaryTag::COROLLARIES
                    .iter()
                    .find(|t| t.label().replace('_', "").to_ascii_lowercase() == other)
                    .ok_or_else(|| PlanError::Invalid(format!("unknown plan mode '{s}'")))?;
                PlanMode::Corollary(*tag)
            }
        };
        Ok(mode)
    }
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanMode::Auto => f.write_str("auto"),
            PlanMode::ThmSdA => f.write_str("thmSD-A"),
            PlanMode::ThmSdB => f.write_str("thmSD-B"),
            PlanMode::Corollary(t) => f.write_str(t.label()),
            PlanMode::Manual => f.write_str("manual"),
        }
    }
}

impl Serialize for PlanMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PlanMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// User-facing planning request.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanRequest {
    pub mode: PlanMode,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    /// Alternative to `gamma` in manual mode: `gamma = alpha / L`.
    pub alpha: Option<f64>,
}

/// Moduli of an instance's kernel.
pub fn kernel_moduli(p: &ProblemInstance) -> KernelModuli {
    KernelModuli { sigma_h: p.kernel.strong_convexity(), l_h: p.kernel.grad_lipschitz() }
}

/// Plan for a concrete instance.
pub fn plan(p: &ProblemInstance, req: &PlanRequest) -> PlanResult<PlannedParams> {
    let m = normalize_moduli(p.f.sigma_f, p.f.sigma_minus_f)?;
    let k = kernel_moduli(p);
    let l_f = p.f.lipschitz;
    let gamma = match (req.gamma, req.alpha) {
        (Some(g), _) => Some(g),
        (None, Some(a)) => Some(a / m.l_fh),
        (None, None) => None,
    };
    match req.mode {
        PlanMode::Manual => {
            let gamma = gamma.ok_or(PlanError::Missing("gamma or alpha for manual mode"))?;
            plan_manual(&m, gamma, req.beta.unwrap_or(0.0), req.c, k, l_f)
        }
        PlanMode::ThmSdA => match gamma {
            Some(g) => with_c_floor(plan_thm_sd_a(&m, req.beta.unwrap_or_else(|| default_beta_a(&m)), g)?, req.c),
            None => plan_thm_sd_a_auto(&m, req.beta, req.c),
        },
        PlanMode::ThmSdB => match gamma {
            Some(g) => {
                let beta = req.beta.unwrap_or(0.0);
                let sh = need(k.sigma_h, "sigma_h")?;
                let lfb = estimate_l_fbeta(&m, beta, g, k.l_h, l_f)?;
                with_c_floor(plan_thm_sd_b(&m, beta, g, sh, lfb)?, req.c)
            }
            None => plan_thm_sd_b_auto(&m, req.beta, req.c, k, l_f),
        },
        PlanMode::Corollary(tag) => {
            let beta = req.beta.unwrap_or(match tag {
                CorollaryTag::WcA => -0.125,
                CorollaryTag::CcvA => -0.25,
                _ => 0.0,
            });
            plan_corollary(tag, &m, req.c, beta, k, l_f, gamma)
        }
        PlanMode::Auto => {
            let a = match gamma {
                Some(g) => plan_thm_sd_a(&m, req.beta.unwrap_or_else(|| default_beta_a(&m)), g),
                None => plan_thm_sd_a_auto(&m, req.beta, req.c),
            };
            match a {
                Ok(params) => with_c_floor(params, req.c),
                Err(err_a) if k.sigma_h.is_some() => {
                    let b = PlanRequest { mode: PlanMode::ThmSdB, ..req.clone() };
                    plan(p, &b).map_err(|_| err_a)
                }
                Err(e) => Err(e),
            }
        }
    }
}

/// A requested `c` may only lower the theorem constant.
fn with_c_floor(mut params: PlannedParams, c: Option<f64>) -> PlanResult<PlannedParams> {
    if let Some(c) = c {
        if !(c > 0.0) || !ge_tol(params.c, c) {
            return Err(PlanError::Violations(vec![violation("0 < c <= theorem c", c, params.c)]));
        }
        params.c = c;
    }
    Ok(params)
}
