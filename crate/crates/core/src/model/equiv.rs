//! Equivalence transformations, the α = 1 gauge, reducibility to constant
//! coefficients and the explicit map to a constant-coefficient equation.

use crate::expr::{Domain, Expr};

use super::time::{invert_time_map, TimeMap};
use super::{KawaharaEq, ModelError, PointTransform};

/// Parameters of the equivalence transformations of the class.
#[derive(Debug, Clone)]
pub enum EquivParams {
    /// `t̃ = T(t)`, `x̃ = δ₁x + δ₂`, `ũ = δ₃u`, any n.
    Usual { d1: f64, d2: f64, d3: f64, t_map: Expr },
    /// n = 1: `X¹ = (δ₃∫α dt + δ₄)⁻¹`, `t̃ = T(t)`, `x̃ = (x + δ₁)X¹ + δ₀`,
    /// `ũ = δ₂u/X¹ − δ₂δ₃(x + δ₁)`.
    GeneralizedN1 { d0: f64, d1: f64, d2: f64, d3: f64, d4: f64, t_map: Expr },
    /// Scalings and shifts preserving α = 1: `t̃ = δ₁δ₃⁻ⁿt + δ₀`,
    /// `x̃ = δ₁x + δ₂`, `ũ = δ₃u`.
    GaugedScaling { d0: f64, d1: f64, d2: f64, d3: f64 },
    /// n = 1, α = 1: `t̃ = (at + b)/(ct + d)`, `x̃ = (e₂x + e₁t + e₀)/(ct + d)`,
    /// `ũ = (e₂(ct + d)u − e₂cx − e₀c + e₁d)/Δ` with `Δ = ad − bc`.
    Moebius { a: f64, b: f64, c: f64, d: f64, e0: f64, e1: f64, e2: f64 },
}

impl EquivParams {
    pub fn identity_usual() -> Self {
        EquivParams::Usual { d1: 1.0, d2: 0.0, d3: 1.0, t_map: Expr::t() }
    }

    /// The point transformation these parameters define for `eq`.
    pub fn transform(&self, eq: &KawaharaEq) -> Result<PointTransform, ModelError> {
        let c = Expr::constant;
        let check_u_scale = |d3: f64| {
            if d3 < 0.0 && eq.n.fract() != 0.0 {
                Err(ModelError::Degenerate("δ₃ < 0 with non-integer n".into()))
            } else {
                Ok(())
            }
        };
        match self {
            EquivParams::Usual { d1, d2, d3, t_map } => {
                if d1 * d3 == 0.0 {
                    return Err(ModelError::Degenerate("δ₁δ₃ = 0".into()));
                }
                check_u_scale(*d3)?;
                PointTransform::new(t_map.clone(), c(*d1), c(*d2), c(*d3), Expr::zero(), &eq.domain)
            }
            EquivParams::GeneralizedN1 { d0, d1, d2, d3, d4, t_map } => {
                require_n1(eq)?;
                if d2 * (d3 * d3 + d4 * d4) == 0.0 {
                    return Err(ModelError::Degenerate("δ₂(δ₃² + δ₄²) = 0".into()));
                }
                let s = integral_of_alpha(eq);
                let denom = *d3 * s + *d4;
                let x1 = Expr::one() / denom.clone();
                let x0 = *d1 * x1.clone() + *d0;
                let u1 = *d2 * denom;
                let u0 = -(*d2 * *d3) * (Expr::x() + *d1);
                PointTransform::new(t_map.clone(), x1, x0, u1, u0, &eq.domain)
            }
            EquivParams::GaugedScaling { d0, d1, d2, d3 } => {
                if d1 * d3 == 0.0 {
                    return Err(ModelError::Degenerate("δ₁δ₃ = 0".into()));
                }
                check_u_scale(*d3)?;
                let rate = d1 * d3.powf(-eq.n);
                let t_map = rate * Expr::t() + *d0;
                let time = TimeMap { forward: t_map, inverse: (Expr::t() - *d0) / rate, closed: true };
                PointTransform::with_time_map(time, c(*d1), c(*d2), c(*d3), Expr::zero(), &eq.domain)
            }
            EquivParams::Moebius { a, b, c: cc, d, e0, e1, e2 } => {
                require_n1(eq)?;
                if !eq.alpha_is_one() {
                    return Err(ModelError::AlphaNotOne);
                }
                let delta = a * d - b * cc;
                if delta == 0.0 || *e2 == 0.0 {
                    return Err(ModelError::Degenerate("Δ = 0 or e₂ = 0".into()));
                }
                let t = Expr::t();
                let den = *cc * t.clone() + *d;
                let time = TimeMap {
                    forward: (*a * t.clone() + *b) / den.clone(),
                    inverse: (*d * t.clone() - *b) / (*a - *cc * t.clone()),
                    closed: true,
                };
                let x1 = *e2 / den.clone();
                let x0 = (*e1 * t + *e0) / den.clone();
                let u1 = (*e2 / delta) * den;
                let u0 = (-(e2 * cc) * Expr::x() + (-e0 * cc + e1 * d)) / delta;
                PointTransform::with_time_map(time, x1, x0, u1, u0, &eq.domain)
            }
        }
    }
}

fn require_n1(eq: &KawaharaEq) -> Result<(), ModelError> {
    if eq.n != 1.0 {
        return Err(ModelError::WrongN { expected: 1.0, got: eq.n });
    }
    Ok(())
}

/// Applies an equivalence transformation, returning the image equation and
/// the transform used.
pub fn apply_equiv(eq: &KawaharaEq, p: &EquivParams) -> Result<(KawaharaEq, PointTransform), ModelError> {
    let tr = p.transform(eq)?;
    Ok((tr.apply(eq)?, tr))
}

/// `∫α dt`: the closed-form antiderivative (zero integration constant) when
/// it exists and is defined on the domain, otherwise quadrature from the left
/// end of the domain.
pub fn integral_of_alpha(eq: &KawaharaEq) -> Expr {
    integral_on(&eq.alpha, &eq.domain)
}

pub(crate) fn integral_on(f: &Expr, dom: &Domain) -> Expr {
    if let Some(s) = f.antiderivative("t").exact() {
        let tape = s.compile();
        if dom.samples(16).iter().all(|&t| tape.eval(&[("t", t)]).is_ok()) {
            return s;
        }
    }
    f.quadrature_integral("t", dom.lo)
}

/// Maps the equation to one with α ≡ 1 by `t̂ = ∫α dt`, `x̂ = x`, `û = u`.
pub fn gauge_alpha1(eq: &KawaharaEq) -> Result<(KawaharaEq, PointTransform), ModelError> {
    let tape = eq.alpha.compile();
    let mut sign = 0.0;
    for t in eq.domain.samples(crate::expr::ZERO_TEST_POINTS) {
        let v = tape.eval(&[("t", t)]).map_err(|e| ModelError::Undefined {
            coef: "alpha",
            t,
            reason: e.to_string(),
        })?;
        if sign != 0.0 && v.signum() != sign {
            return Err(ModelError::AlphaSignChange);
        }
        sign = v.signum();
    }
    if eq.alpha_is_one() {
        return Ok((eq.clone(), PointTransform::identity(&eq.domain)));
    }
    let s = integral_of_alpha(eq);
    let tr = PointTransform::new(s, Expr::one(), Expr::zero(), Expr::one(), Expr::zero(), &eq.domain)?;
    let mut gauged = tr.apply(eq)?;
    gauged.alpha = Expr::one();
    Ok((gauged, tr))
}

/// Constants certifying reducibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    /// n ≠ 1: the constant ratios β/α and σ/α.
    Ratios { beta_over_alpha: f64, sigma_over_alpha: f64 },
    /// n = 1: `c₁ = (β/α)_t/α`, `c₀ = β/α − c₁∫α dt`, `k = σα²/β³`.
    N1 { c1: f64, c0: f64, k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reducibility {
    pub reducible: bool,
    pub witness: Option<Witness>,
    /// The first criterion that failed, when not reducible.
    pub failed: Option<String>,
}

fn value(e: &Expr, t: f64) -> Result<f64, ModelError> {
    e.eval(&[("t", t)]).map_err(|err| ModelError::ZeroTest(err.to_string()))
}

fn vanishes(e: &Expr, dom: &Domain) -> Result<bool, ModelError> {
    e.is_zero(dom).map_err(|err| ModelError::ZeroTest(err.to_string()))
}

/// Tests whether the equation is reducible to a constant-coefficient one:
/// `(β/α)_t = (σ/α)_t = 0` for n ≠ 1, and `((β/α)_t/α)_t = 0`,
/// `(σα²/β³)_t = 0` for n = 1. The tests are made scale-free by working with
/// logarithmic derivatives or normalized coefficients.
pub fn reducibility(eq: &KawaharaEq) -> Result<Reducibility, ModelError> {
    let dom = &eq.domain;
    let t0 = 0.5 * (dom.lo + dom.hi);
    let w = dom.width();
    let not = |criterion: &str| Reducibility { reducible: false, witness: None, failed: Some(criterion.into()) };
    if eq.n != 1.0 {
        let g = eq.beta.clone() / eq.alpha.clone();
        let h = eq.sigma.clone() / eq.alpha.clone();
        if !vanishes(&(g.diff("t") / g.clone() * w), dom)? {
            return Ok(not("(β/α)_t = 0"));
        }
        if !vanishes(&(h.diff("t") / h.clone() * w), dom)? {
            return Ok(not("(σ/α)_t = 0"));
        }
        let witness = Witness::Ratios { beta_over_alpha: value(&g, t0)?, sigma_over_alpha: value(&h, t0)? };
        return Ok(Reducibility { reducible: true, witness: Some(witness), failed: None });
    }
    let (a0, b0, _) = eq.coefficients_at(t0)?;
    let alpha_n = eq.alpha.clone() / a0.abs();
    let beta_n = eq.beta.clone() / b0.abs();
    let g_n = beta_n / alpha_n.clone();
    let c_n = g_n.diff("t") / alpha_n;
    if !vanishes(&(c_n.diff("t") * (w * w)), dom)? {
        return Ok(not("((β/α)_t/α)_t = 0"));
    }
    let k = eq.sigma.clone() * Expr::powf(eq.alpha.clone(), 2.0) / Expr::powf(eq.beta.clone(), 3.0);
    if !vanishes(&(k.diff("t") / k.clone() * w), dom)? {
        return Ok(not("(σα²/β³)_t = 0"));
    }
    let g = eq.beta.clone() / eq.alpha.clone();
    let mut c1 = value(&(g.diff("t") / eq.alpha.clone()), t0)?;
    let g0 = value(&g, t0)?;
    let s0 = value(&integral_of_alpha(eq), t0)?;
    let s_scale = s0.abs().max(value(&eq.alpha, t0)?.abs() * w);
    if (c1 * s_scale).abs() <= 1e-12 * g0.abs() {
        c1 = 0.0;
    }
    let c0 = g0 - c1 * s0;
    let witness = Witness::N1 { c1, c0, k: value(&k, t0)? };
    Ok(Reducibility { reducible: true, witness: Some(witness), failed: None })
}

/// Result of [`map_to_constant`].
#[derive(Debug, Clone)]
pub struct MapToConstant {
    pub constant_eq: KawaharaEq,
    /// Maps the input equation onto `constant_eq`.
    pub transform: PointTransform,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub witness: Witness,
    /// `(δ₁, δ₃, δ₄)` of the n = 1 map; `None` for n ≠ 1.
    pub deltas: Option<(f64, f64, f64)>,
}

/// The n = 1 transform `t̃ = ∫α(δ₃∫α dt + δ₄)⁻² dt`, `x̃ = (x + δ₁)/(δ₃∫α dt + δ₄)`,
/// `ũ = (δ₃∫α dt + δ₄)u − δ₃(x + δ₁)`, which sends α to α̃ = 1.
pub fn n1_constant_map(eq: &KawaharaEq, d1: f64, d3: f64, d4: f64) -> Result<PointTransform, ModelError> {
    require_n1(eq)?;
    let s = integral_of_alpha(eq);
    let s_map = invert_time_map(&s, &eq.domain)?;
    let big_x = d3 * s_map.forward.clone() + d4;
    // t̃ as a function of t, and t as a function of t̃ through S⁻¹.
    let (t_map, s_of_ttilde) = if d3 != 0.0 {
        (-1.0 / (d3 * big_x.clone()), (-1.0 / (d3 * Expr::t()) - d4) / d3)
    } else {
        if d4 == 0.0 {
            return Err(ModelError::Degenerate("δ₃ = δ₄ = 0".into()));
        }
        (s_map.forward.clone() / (d4 * d4), Expr::t() * (d4 * d4))
    };
    let time = TimeMap {
        forward: t_map,
        inverse: s_map.inverse.subst_one("t", &s_of_ttilde),
        closed: s_map.closed,
    };
    let x1 = Expr::one() / big_x.clone();
    let x0 = d1 * x1.clone();
    let u0 = -d3 * (Expr::x() + d1);
    PointTransform::with_time_map(time, x1, x0, big_x, u0, &eq.domain)
}

/// Constructs a constant-coefficient target and the explicit transform onto
/// it. For n ≠ 1 this is the gauge; for n = 1 the δ-parameterized map with
/// δ₁ = 0, δ₃ = 1, δ₄ = c₀/c₁ (or δ₃ = 0, δ₄ = 1 when c₁ = 0), giving α̃ = 1,
/// β̃ = c₁ (resp. c₀) and σ̃ = kβ̃³.
pub fn map_to_constant(eq: &KawaharaEq) -> Result<MapToConstant, ModelError> {
    let red = reducibility(eq)?;
    let Some(witness) = red.witness else {
        return Err(ModelError::NotReducible { criterion: red.failed.unwrap_or_default() });
    };
    let (transform, beta, sigma, deltas) = match witness {
        Witness::Ratios { beta_over_alpha, sigma_over_alpha } => {
            let (_, tr) = gauge_alpha1(eq)?;
            (tr, beta_over_alpha, sigma_over_alpha, None)
        }
        Witness::N1 { c1, c0, k } => {
            let (d3, d4, beta) = if c1 != 0.0 { (1.0, c0 / c1, c1) } else { (0.0, 1.0, c0) };
            let tr = n1_constant_map(eq, 0.0, d3, d4)?;
            (tr, beta, k * beta.powi(3), Some((0.0, d3, d4)))
        }
    };
    let constant_eq = KawaharaEq::new(
        eq.n,
        Expr::one(),
        Expr::constant(beta),
        Expr::constant(sigma),
        transform.target_domain()?,
    )?;
    Ok(MapToConstant { constant_eq, transform, alpha: 1.0, beta, sigma, witness, deltas })
}
