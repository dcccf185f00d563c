//! Inversion of strictly monotone time maps t̃ = T(t).

use std::sync::Arc;

use crate::expr::{Domain, Expr, NumericFn, Tape};

use super::ModelError;

/// A time map together with its inverse, both as expressions in `t`
/// (the inverse reads its argument `t` as t̃).
#[derive(Debug, Clone)]
pub struct TimeMap {
    pub forward: Expr,
    pub inverse: Expr,
    /// False when the inverse is a numerical root-finding node.
    pub closed: bool,
}

/// Snaps `v` to a nearby rational with small denominator, so that fitted
/// exponents such as 0.49999999999999994 print and integrate as 1/2.
fn snap(v: f64) -> f64 {
    snap_rational(v, 1e-10)
}

pub(crate) fn snap_rational(v: f64, tol: f64) -> f64 {
    for den in 1..=12 {
        let r = (v * den as f64).round() / den as f64;
        if (v - r).abs() <= tol * (1.0 + v.abs()) {
            return r;
        }
    }
    v
}

fn at(e: &Expr, t: f64) -> Option<f64> {
    e.eval(&[("t", t)]).ok()
}

fn identically_zero(e: &Expr, dom: &Domain) -> bool {
    e.is_zero(dom).unwrap_or(false)
}

/// Checks a candidate closed pair on the domain: forward agrees with `t_map`
/// and the inverse undoes it.
fn accept(t_map: &Expr, forward: Expr, inverse: Expr, dom: &Domain) -> Option<TimeMap> {
    let scale = dom
        .samples(8)
        .iter()
        .filter_map(|&t| at(t_map, t))
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let agree = (t_map.clone() - forward.clone()) / scale;
    let round_trip = (inverse.subst_one("t", &forward) - Expr::t()) / dom.hi.abs().max(dom.lo.abs()).max(1.0);
    (identically_zero(&agree, dom) && identically_zero(&round_trip, dom))
        .then_some(TimeMap { forward, inverse, closed: true })
}

fn fit_closed(t_map: &Expr, dom: &Domain) -> Option<TimeMap> {
    let t = Expr::t();
    let d1 = t_map.diff("t");
    let d2 = d1.diff("t");
    let t0 = 0.5 * (dom.lo + dom.hi);
    let width = dom.width();
    let k = d2.clone() / d1.clone();
    let (t_at, d1_at) = (at(t_map, t0)?, at(&d1, t0)?);

    // Linear: T'' ≡ 0.
    if identically_zero(&(k.clone() * width), dom) {
        let a = d1_at;
        let b = t_at - a * t0;
        let forward = a * t.clone() + b;
        let inverse = (t.clone() - b) / a;
        if let Some(m) = accept(t_map, forward, inverse, dom) {
            return Some(m);
        }
    }
    // Exponential: T''/T' constant.
    if identically_zero(&(k.diff("t") * (width * width)), dom) {
        let kk = snap(at(&k, t0)?);
        let amp = d1_at / (kk * (kk * t0).exp());
        let shift = t_at - amp * (kk * t0).exp();
        let forward = amp * Expr::exp(kk * t.clone()) + shift;
        let inverse = Expr::ln((t.clone() - shift) / amp) / kk;
        if let Some(m) = accept(t_map, forward, inverse, dom) {
            return Some(m);
        }
    }
    // Power: t·T''/T' constant (positive domains only).
    if dom.lo > 0.0 {
        let m_expr = t.clone() * k.clone();
        if identically_zero(&(m_expr.diff("t") * width), dom) {
            let m = snap(at(&m_expr, t0)?);
            let c = d1_at / t0.powf(m);
            let (forward, inverse) = if (m + 1.0).abs() < 1e-12 {
                let shift = t_at - c * t0.ln();
                (c * Expr::ln(t.clone()) + shift, Expr::exp((t.clone() - shift) / c))
            } else {
                let shift = t_at - c * t0.powf(m + 1.0) / (m + 1.0);
                (
                    c / (m + 1.0) * Expr::powf(t.clone(), m + 1.0) + shift,
                    Expr::powf((t.clone() - shift) * ((m + 1.0) / c), 1.0 / (m + 1.0)),
                )
            };
            if let Some(fit) = accept(t_map, forward, inverse, dom) {
                return Some(fit);
            }
        }
    }
    // Möbius: (T'/T'')' ≡ −1/2.
    let w = d1.clone() / d2.clone();
    if identically_zero(&(w.diff("t") + 0.5), dom) {
        let e = -2.0 * at(&w, t0)? - t0;
        let b = -d1_at * (t0 + e) * (t0 + e);
        let a = t_at - b / (t0 + e);
        let forward = a + b / (t.clone() + e);
        let inverse = b / (t.clone() - a) - e;
        if let Some(m) = accept(t_map, forward, inverse, dom) {
            return Some(m);
        }
    }
    None
}

/// Finds the inverse of a strictly monotone time map on `dom`: a closed form
/// for linear, exponential, power and Möbius maps, otherwise a numerical
/// inverse.
pub fn invert_time_map(t_map: &Expr, dom: &Domain) -> Result<TimeMap, ModelError> {
    let d1 = t_map.diff("t");
    let mut sign = 0.0;
    for t in dom.samples(crate::expr::ZERO_TEST_POINTS) {
        let v = at(&d1, t).ok_or_else(|| ModelError::NotInvertible(format!("T' undefined at t = {t}")))?;
        if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
            return Err(ModelError::NotInvertible("T' vanishes or changes sign".into()));
        }
        sign = v.signum();
    }
    if let Some(fit) = fit_closed(t_map, dom) {
        return Ok(fit);
    }
    let inv = NumericInverse::new(t_map.clone(), dom)?;
    Ok(TimeMap { forward: t_map.clone(), inverse: Expr::apply(Arc::new(inv), Expr::t()), closed: false })
}

/// Numerical inverse of a monotone map: bisection to bracket the root, then
/// Newton polishing to 1e-12.
#[derive(Debug)]
pub struct NumericInverse {
    forward: Expr,
    derivative: Expr,
    forward_tape: Tape,
    derivative_tape: Tape,
    lo: f64,
    hi: f64,
    name: String,
}

impl NumericInverse {
    pub fn new(forward: Expr, dom: &Domain) -> Result<Self, ModelError> {
        let derivative = forward.diff("t");
        Ok(NumericInverse {
            name: format!("inverse[{forward}]"),
            forward_tape: forward.compile(),
            derivative_tape: derivative.compile(),
            forward,
            derivative,
            lo: dom.lo,
            hi: dom.hi,
        })
    }

    fn f(&self, t: f64) -> Result<f64, String> {
        self.forward_tape.eval(&[("t", t)]).map_err(|e| e.to_string())
    }
}

impl NumericFn for NumericInverse {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, s: f64) -> Result<f64, String> {
        let (mut lo, mut hi) = (self.lo, self.hi);
        let (mut flo, mut fhi) = (self.f(lo)? - s, self.f(hi)? - s);
        // Allow a small overshoot beyond the domain for points on its image boundary.
        let mut widen = 0;
        while flo * fhi > 0.0 {
            if widen >= 4 {
                return Err(format!("{s} is outside the image of [{}, {}]", self.lo, self.hi));
            }
            let w = 0.05 * (self.hi - self.lo);
            if flo.abs() < fhi.abs() {
                lo -= w;
                flo = self.f(lo)? - s;
            } else {
                hi += w;
                fhi = self.f(hi)? - s;
            }
            widen += 1;
        }
        if flo == 0.0 {
            return Ok(lo);
        }
        if fhi == 0.0 {
            return Ok(hi);
        }
        let increasing = fhi > flo;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let fm = self.f(mid)? - s;
            if (fm > 0.0) == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut t = 0.5 * (lo + hi);
        for _ in 0..50 {
            let d = self.derivative_tape.eval(&[("t", t)]).map_err(|e| e.to_string())?;
            let step = (self.f(t)? - s) / d;
            let next = t - step;
            t = if next.is_finite() { next } else { t };
            if step.abs() <= 1e-12 * (1.0 + t.abs()) {
                return Ok(t);
            }
        }
        Ok(t)
    }

    fn derivative(&self, applied: &Expr, _arg: &Expr) -> Expr {
        Expr::one() / self.derivative.subst_one("t", applied)
    }
}

impl NumericInverse {
    pub fn forward(&self) -> &Expr {
        &self.forward
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(src: &str, dom: Domain, closed: bool) {
        let t_map = Expr::parse(src).unwrap();
        let m = invert_time_map(&t_map, &dom).unwrap();
        assert_eq!(m.closed, closed, "{src}");
        for t in dom.samples(10) {
            let s = t_map.eval(&[("t", t)]).unwrap();
            let back = m.inverse.eval(&[("t", s)]).unwrap();
            assert!((back - t).abs() < 1e-11 * (1.0 + t.abs()), "{src}: {back} vs {t}");
        }
    }

    #[test]
    fn closed_forms() {
        check("2*t + 3", Domain::t(1.0, 2.0), true);
        check("3*exp(0.5*t) - 1", Domain::t(1.0, 2.0), true);
        check("t^2/2", Domain::t(1.0, 2.0), true);
        check("(2/3)*t^(3/2)", Domain::t(1.0, 2.0), true);
        check("ln(t)", Domain::t(1.0, 2.0), true);
        check("-1/t", Domain::t(1.0, 2.0), true);
        check("(2*t+1)/(t+3)", Domain::t(1.0, 2.0), true);
    }

    #[test]
    fn numeric_fallback() {
        check("t + sin(t)/2", Domain::t(1.0, 4.0), false);
        let quad = Expr::parse("exp(t^2)").unwrap().quadrature_integral("t", 1.0);
        let m = invert_time_map(&quad, &Domain::t(1.0, 1.5)).unwrap();
        assert!(!m.closed);
        let s = quad.eval(&[("t", 1.3)]).unwrap();
        assert!((m.inverse.eval(&[("t", s)]).unwrap() - 1.3).abs() < 1e-11);
        // derivative of the inverse is 1/T'(T⁻¹(s))
        let d = m.inverse.diff("t").eval(&[("t", s)]).unwrap();
        assert!((d - 1.0 / 1.69f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_monotone() {
        let t_map = Expr::parse("(t-1.5)^2").unwrap();
        assert!(invert_time_map(&t_map, &Domain::t(1.0, 2.0)).is_err());
    }
}
