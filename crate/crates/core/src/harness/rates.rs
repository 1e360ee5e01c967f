//! Empirical convergence-rate classification of merit traces.
//!
//! With `e_k = L(x^{k+1}, x^k) - phi*`, a KL exponent `theta` gives finite
//! termination (`theta = 0`), linear decay `e_k ~ Q^k` (`theta <= 1/2`) or
//! power decay `e_k ~ k^{-1/(2 theta - 1)}` (`1/2 < theta < 1`). The fits
//! below pick whichever model explains the tail best.

use serde::Serialize;

use crate::error::{Error, Result};

/// Leading iterations dropped as transient.
pub const SKIP_ROWS: usize = 10;
pub const MIN_ROWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateRegime {
    Finite,
    Linear,
    SublinearPower,
}

/// Least-squares line `y = intercept + slope t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(t: &[f64], y: &[f64]) -> LineFit {
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        stt += (a - mt) * (a - mt);
        sty += (a - mt) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let sse: f64 = t.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    LineFit { slope, intercept, r_squared }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub regime: RateRegime,
    /// Linear factor `Q` when linear.
    pub q: Option<f64>,
    /// Power exponent `p` in `e_k ~ k^p` when sublinear.
    pub exponent: Option<f64>,
    /// R² of the selected fit (1 for finite termination).
    pub r_squared: f64,
    /// KL exponent implied by the fit, where one applies.
    pub theta: Option<f64>,
    pub phi_star: f64,
    pub phi_star_estimated: bool,
    pub rows_used: usize,
    /// First index with `e_k = 0` when finite.
    pub finite_at: Option<usize>,
    pub linear_fit: Option<LineFit>,
    pub power_fit: Option<LineFit>,
}

/// `theta` from a function-value exponent `p = -1/(2 theta - 1)`.
pub fn theta_from_exponent(p: f64) -> f64 {
    0.5 * (1.0 - 1.0 / p)
}

pub fn exponent_from_theta(theta: f64) -> f64 {
    -1.0 / (2.0 * theta - 1.0)
}

/// `theta` from an iterate-error exponent `p = -(1 - theta)/(2 theta - 1)`.
pub fn theta_from_sequence_exponent(p: f64) -> f64 {
    (1.0 - p) / (1.0 - 2.0 * p)
}

pub fn sequence_exponent_from_theta(theta: f64) -> f64 {
    -(1.0 - theta) / (2.0 * theta - 1.0)
}

/// Roundoff guard used when `phi*` is estimated as the trace minimum.
pub fn phi_star_guard(min: f64) -> f64 {
    4.0 * f64::EPSILON * min.abs().max(1.0)
}

/// Classify `e_k = merits[k + 1] - phi*`. `phi*` defaults to the smallest
/// merit minus a roundoff guard.
pub fn analyze_merits(merits: &[f64], phi_star: Option<f64>) -> Result<RateReport> {
    let finite: Vec<f64> = merits.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() != merits.len() {
        return Err(Error::Rates("merit column contains non-finite values".into()));
    }
    let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let guard = phi_star_guard(min);
    let (phi_star, estimated) = match phi_star {
        Some(v) => (v, false),
        None => (min - guard, true),
    };
    let e: Vec<f64> = merits.iter().skip(1).map(|m| m - phi_star).collect();
    analyze_errors(&e, 1, guard).map(|mut r| {
        r.phi_star = phi_star;
        r.phi_star_estimated = estimated;
        r
    })
}

/// Classify an error sequence whose first entry has index `first_k`; values
/// at or below `2 * zero_tol` count as zero.
pub fn analyze_errors(e: &[f64], first_k: usize, zero_tol: f64) -> Result<RateReport> {
    let zero = |v: f64| v <= 2.0 * zero_tol;
    if e.iter().any(|&v| v < -1e3 * zero_tol.max(f64::EPSILON)) {
        return Err(Error::Rates("merit drops below phi*".into()));
    }
    let tail_zero = e.iter().rev().take_while(|&&v| zero(v)).count();
    let first_zero = e.len() - tail_zero;
    // A jump from clearly positive to exactly zero is finite termination; a
    // gradual slide into roundoff is not.
    let jump = first_zero == 0 || e[first_zero - 1] > 1e6 * zero_tol;
    if tail_zero >= 3 && jump {
        return Ok(RateReport {
            regime: RateRegime::Finite,
            q: None,
            exponent: None,
            r_squared: 1.0,
            theta: Some(0.0),
            phi_star: 0.0,
            phi_star_estimated: false,
            rows_used: e.len(),
            finite_at: Some(first_zero + first_k),
            linear_fit: None,
            power_fit: None,
        });
    }
    let usable: Vec<(f64, f64)> = e
        .iter()
        .enumerate()
        .skip(SKIP_ROWS)
        .filter(|(_, &v)| v > 1e3 * zero_tol)
        .map(|(k, &v)| ((k + first_k) as f64, v.ln()))
        .collect();
    if usable.len() < MIN_ROWS {
        return Err(Error::Rates(format!(
            "only {} usable rows after dropping the first {SKIP_ROWS} and roundoff-level errors; need {MIN_ROWS}",
            usable.len()
        )));
    }
    let ks: Vec<f64> = usable.iter().map(|u| u.0).collect();
    let logs: Vec<f64> = usable.iter().map(|u| u.1).collect();
    let log_ks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let lin = fit_line(&ks, &logs);
    let pow = fit_line(&log_ks, &logs);
    let report = |regime, r_squared| RateReport {
        regime,
        q: None,
        exponent: None,
        r_squared,
        theta: None,
        phi_star: 0.0,
        phi_star_estimated: false,
        rows_used: usable.len(),
        finite_at: None,
        linear_fit: Some(lin),
        power_fit: Some(pow),
    };
    if lin.r_squared >= pow.r_squared {
        Ok(RateReport { q: Some(lin.slope.exp()), ..report(RateRegime::Linear, lin.r_squared) })
    } else {
        let theta = theta_from_exponent(pow.slope);
        Ok(RateReport {
            exponent: Some(pow.slope),
            theta: (theta > 0.0 && theta < 1.0).then_some(theta),
            ..report(RateRegime::SublinearPower, pow.r_squared)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_back_out() {
        assert_eq!(theta_from_exponent(-2.0), 0.75);
        for &t in &[0.55, 0.6, 0.75, 0.9, 0.99] {
            assert!((theta_from_exponent(exponent_from_theta(t)) - t).abs() < 1e-12);
            assert!((theta_from_sequence_exponent(sequence_exponent_from_theta(t)) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_power_trace() {
        let merits: Vec<f64> = (0..200).map(|k| if k == 0 { 10.0 } else { (k as f64).powi(-2) }).collect();
        let r = analyze_merits(&merits, Some(0.0)).unwrap();
        assert_eq!(r.regime, RateRegime::SublinearPower);
        assert!((r.exponent.unwrap() + 2.0).abs() < 1e-9);
        assert!((r.theta.unwrap() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn synthetic_linear_trace() {
        let merits: Vec<f64> = (0..60).map(|k| 3.0 + 0.7f64.powi(k)).collect();
        let r = analyze_merits(&merits, Some(3.0)).unwrap();
        assert_eq!(r.regime, RateRegime::Linear);
        assert!((r.q.unwrap() - 0.7).abs() < 1e-6);
    }

    #[test]
    fn finite_termination() {
        let mut merits: Vec<f64> = (0..8).map(|k| 1.0 + 1.0 / (k as f64 + 1.0)).collect();
        merits.extend(std::iter::repeat_n(1.0, 30));
        let r = analyze_merits(&merits, None).unwrap();
        assert_eq!(r.regime, RateRegime::Finite);
        assert_eq!(r.finite_at, Some(8));
        assert!(r.phi_star_estimated);
    }

    #[test]
    fn short_trace_is_an_error() {
        let merits: Vec<f64> = (0..25).map(|k| 0.5f64.powi(k)).collect();
        assert!(analyze_merits(&merits, Some(0.0)).is_err());
    }
}
