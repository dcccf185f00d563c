//! Sampling-based identity testing on an interval.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Bindings, Env, Expr, Tape};

static EPS_ZERO_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Current default tolerance for [`Expr::is_zero`].
pub fn default_eps_zero() -> f64 {
    f64::from_bits(EPS_ZERO_BITS.load(Ordering::Relaxed))
}

/// Overrides the default tolerance process-wide.
pub fn set_default_eps_zero(eps: f64) {
    assert!(eps > 0.0 && eps.is_finite(), "eps_zero must be positive");
    EPS_ZERO_BITS.store(eps.to_bits(), Ordering::Relaxed);
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("empty interval [{lo}, {hi}]")]
    Empty { lo: f64, hi: f64 },
    #[error("excluded point {0} lies outside the interval")]
    Exclusion(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error("domain too singular: {failed} of {total} sample points failed to evaluate (first: {first})")]
    TooSingular { failed: usize, total: usize, first: String },
}

/// A closed interval of one variable with isolated singular points removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub var: String,
    pub lo: f64,
    pub hi: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<f64>,
}

/// Number of points used by the identity test.
pub const ZERO_TEST_POINTS: usize = 64;

const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_8;

impl Domain {
    pub fn new(var: &str, lo: f64, hi: f64) -> Result<Domain, DomainError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(DomainError::Empty { lo, hi });
        }
        Ok(Domain { var: var.to_string(), lo, hi, exclusions: Vec::new() })
    }

    pub fn t(lo: f64, hi: f64) -> Domain {
        Domain::new("t", lo, hi).expect("valid interval")
    }

    pub fn with_exclusions(mut self, points: &[f64]) -> Result<Domain, DomainError> {
        for &p in points {
            if p < self.lo || p > self.hi {
                return Err(DomainError::Exclusion(p));
            }
        }
        self.exclusions.extend_from_slice(points);
        Ok(self)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    /// Deterministic low-discrepancy points (golden-ratio sequence), with
    /// points near exclusions dropped.
    pub fn samples(&self, count: usize) -> Vec<f64> {
        let guard = 1e-6 * self.width();
        (0..count)
            .map(|i| {
                let frac = (0.5 + i as f64 * GOLDEN_FRACTION).fract();
                self.lo + frac * self.width()
            })
            .filter(|v| self.exclusions.iter().all(|p| (v - p).abs() > guard))
            .collect()
    }

    /// `count` evenly spaced points including both endpoints.
    pub fn linspace(&self, count: usize) -> Vec<f64> {
        linspace(self.lo, self.hi, count)
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

/// Shared core of the identity tests: evaluates at every point, skips
/// failures, and compares against `eps·(1 + max |subterm|)`.
pub(crate) fn zero_at_points<'a, I, B>(tape: &Tape, points: I, eps: f64) -> Result<bool, ZeroTestError>
where
    I: IntoIterator<Item = &'a B>,
    B: Bindings + 'a + ?Sized,
{
    let mut total = 0;
    let mut failed = 0;
    let mut first = String::new();
    let mut all_small = true;
    for p in points {
        total += 1;
        match tape.eval_with_max(p) {
            Ok((v, max)) => {
                if v.abs() > eps * (1.0 + max) {
                    all_small = false;
                }
            }
            Err(e) => {
                if failed == 0 {
                    first = e.to_string();
                }
                failed += 1;
            }
        }
    }
    if failed * 2 > total {
        return Err(ZeroTestError::TooSingular { failed, total, first });
    }
    Ok(all_small)
}

impl Expr {
    /// True when the expression vanishes at all sample points of `dom`.
    pub fn is_zero(&self, dom: &Domain) -> Result<bool, ZeroTestError> {
        self.is_zero_with(dom, &Env::new(), default_eps_zero())
    }

    /// Identity test with extra parameter bindings and an explicit tolerance.
    pub fn is_zero_with(&self, dom: &Domain, params: &Env, eps: f64) -> Result<bool, ZeroTestError> {
        let tape = self.compile();
        let points: Vec<Env> = dom
            .samples(ZERO_TEST_POINTS)
            .into_iter()
            .map(|v| {
                let mut env = params.clone();
                env.set(&dom.var, v);
                env
            })
            .collect();
        zero_at_points(&tape, points.iter(), eps)
    }

    /// Identity test over explicit points (e.g. a `(t, x)` grid).
    pub fn is_zero_on(&self, points: &[Env], eps: f64) -> Result<bool, ZeroTestError> {
        zero_at_points(&self.compile(), points.iter(), eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_tolerance_is_1e_9() {
        assert_eq!(f64::from_bits(0x3E11_2E0B_E826_D695), 1e-9);
    }

    #[test]
    fn identities() {
        let d = Domain::t(1.0, 2.0);
        assert!(Expr::parse("t - t").unwrap().is_zero(&d).unwrap());
        assert!(!Expr::parse("t^2 - t").unwrap().is_zero(&d).unwrap());
        let e = Expr::parse_with("(c1*t+c0)^3 / (c1*t+c0)^3", &["c1", "c0"]).unwrap().diff("t");
        let params = Env::new().with("c1", 2.0).with("c0", 1.0);
        assert!(e.is_zero_with(&d, &params, 1e-9).unwrap());
    }

    #[test]
    fn singular_domain_is_reported() {
        let d = Domain::t(-2.0, -1.0);
        let err = Expr::parse("ln(t)").unwrap().is_zero(&d).unwrap_err();
        assert!(matches!(err, ZeroTestError::TooSingular { failed: 64, .. }));
    }

    #[test]
    fn samples_avoid_exclusions_and_stay_inside() {
        let d = Domain::t(0.0, 1.0).with_exclusions(&[0.5]).unwrap();
        let s = d.samples(64);
        assert!(s.iter().all(|v| (0.0..=1.0).contains(v) && (v - 0.5).abs() > 1e-6));
        assert!(Domain::new("t", 2.0, 1.0).is_err());
        assert!(Domain::t(0.0, 1.0).with_exclusions(&[3.0]).is_err());
    }
}
