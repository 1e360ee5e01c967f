//! Extended reals `(-inf, +inf]` plus an explicit domain-error state.

use std::fmt;
use std::ops::{Add, Mul, Sub};

/// A value of an extended-real-valued oracle.
///
/// `-inf` is never produced by the oracles in this crate (all functions are
/// proper and bounded below where they are finite), so it is not represented.
/// Arithmetic follows the convention `inf - inf = inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ext {
    Finite(f64),
    PosInf,
    DomainError,
}

impl Ext {
    pub const ZERO: Ext = Ext::Finite(0.0);

    /// Classifies a raw float: `+inf` maps to [`Ext::PosInf`], `NaN` and
    /// `-inf` to [`Ext::DomainError`].
    pub fn from_f64(v: f64) -> Ext {
        if v.is_finite() {
            Ext::Finite(v)
        } else if v == f64::INFINITY {
            Ext::PosInf
        } else {
            Ext::DomainError
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ext::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Raw float view: `+inf` for [`Ext::PosInf`], `NaN` for a domain error.
    pub fn to_f64(self) -> f64 {
        match self {
            Ext::Finite(v) => v,
            Ext::PosInf => f64::INFINITY,
            Ext::DomainError => f64::NAN,
        }
    }

    /// `self <= other + tol`, with `+inf <= +inf` true and domain errors false.
    pub fn le_with_tol(self, other: Ext, tol: f64) -> bool {
        match (self, other) {
            (Ext::DomainError, _) | (_, Ext::DomainError) => false,
            (_, Ext::PosInf) => true,
            (Ext::PosInf, Ext::Finite(_)) => false,
            (Ext::Finite(a), Ext::Finite(b)) => a <= b + tol,
        }
    }
}

impl Default for Ext {
    fn default() -> Self {
        Ext::ZERO
    }
}

impl From<f64> for Ext {
    fn from(v: f64) -> Self {
        Ext::from_f64(v)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(v) => write!(f, "{v}"),
            Ext::PosInf => write!(f, "inf"),
            Ext::DomainError => write!(f, "domain-error"),
        }
    }
}

impl Add for Ext {
    type Output = Ext;
    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::DomainError, _) | (_, Ext::DomainError) => Ext::DomainError,
            (Ext::PosInf, _) | (_, Ext::PosInf) => Ext::PosInf,
            (Ext::Finite(a), Ext::Finite(b)) => Ext::from_f64(a + b),
        }
    }
}

impl Add<f64> for Ext {
    type Output = Ext;
    fn add(self, rhs: f64) -> Ext {
        self + Ext::from_f64(rhs)
    }
}

impl Sub for Ext {
    type Output = Ext;
    /// `inf - inf = inf`; `finite - inf` would be `-inf`, which is outside
    /// the represented range and reported as a domain error.
    fn sub(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::DomainError, _) | (_, Ext::DomainError) => Ext::DomainError,
            (Ext::PosInf, _) => Ext::PosInf,
            (Ext::Finite(_), Ext::PosInf) => Ext::DomainError,
            (Ext::Finite(a), Ext::Finite(b)) => Ext::from_f64(a - b),
        }
    }
}

impl Sub<f64> for Ext {
    type Output = Ext;
    fn sub(self, rhs: f64) -> Ext {
        self - Ext::from_f64(rhs)
    }
}

impl Mul<f64> for Ext {
    type Output = Ext;
    /// Scaling by a nonnegative factor; `0 * inf` stays `inf` (indicator
    /// functions keep their support under scaling).
    fn mul(self, rhs: f64) -> Ext {
        match self {
            Ext::Finite(a) => Ext::from_f64(a * rhs),
            Ext::PosInf if rhs >= 0.0 => Ext::PosInf,
            _ => Ext::DomainError,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventions() {
        assert_eq!(Ext::PosInf - Ext::PosInf, Ext::PosInf);
        assert_eq!(Ext::Finite(1.0) + Ext::PosInf, Ext::PosInf);
        assert_eq!(Ext::Finite(1.0) - Ext::PosInf, Ext::DomainError);
        assert_eq!(Ext::DomainError + Ext::PosInf, Ext::DomainError);
        assert_eq!(Ext::from_f64(f64::NAN), Ext::DomainError);
        assert_eq!(Ext::PosInf * 0.0, Ext::PosInf);
        assert_eq!(Ext::Finite(2.0) * 0.5, Ext::Finite(1.0));
    }

    #[test]
    fn ordering() {
        assert!(Ext::Finite(1.0).le_with_tol(Ext::PosInf, 0.0));
        assert!(Ext::PosInf.le_with_tol(Ext::PosInf, 0.0));
        assert!(!Ext::PosInf.le_with_tol(Ext::Finite(1e300), 0.0));
        assert!(Ext::Finite(1.0 + 1e-13).le_with_tol(Ext::Finite(1.0), 1e-12));
        assert!(!Ext::DomainError.le_with_tol(Ext::PosInf, 0.0));
    }
}
