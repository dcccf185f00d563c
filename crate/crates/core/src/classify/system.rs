//! The classifying system for (β, σ) and its reduction to canonical form.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::expr::{Domain, Expr, ZERO_TEST_POINTS};
use crate::model::{snap_rational, EquivParams, KawaharaEq};

use super::{Case, ClassifyError, ClassifyOptions};

/// Coefficients of `(pt + q)β_t = rβ`, `(pt + q)σ_t = (5r + 2p)σ/3` when
/// n ≠ 1 (s = 0), or of `(pt² + qt + r)β_t = (pt + s)β`,
/// `(pt² + qt + r)σ_t = (3pt + (5s + 2q)/3)σ` when n = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyingQuadruple {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl ClassifyingQuadruple {
    /// Scales so that the first nonzero of (p, q, r) is 1. Returns `None` if
    /// all three vanish.
    pub fn normalized(self) -> Option<Self> {
        let lead = [self.p, self.q, self.r].into_iter().find(|v| *v != 0.0)?;
        Some(ClassifyingQuadruple { p: self.p / lead, q: self.q / lead, r: self.r / lead, s: self.s / lead })
    }

    pub fn discriminant(&self) -> f64 {
        self.q * self.q - 4.0 * self.p * self.r
    }

    /// Cosine of the angle between two quadruples seen as vectors.
    pub fn cosine(&self, other: &Self) -> f64 {
        let a = [self.p, self.q, self.r, self.s];
        let b = [other.p, other.q, other.r, other.s];
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }
}

/// Values of β, β_t, σ, σ_t at t.
struct Sample {
    t: f64,
    b: f64,
    bt: f64,
    s: f64,
    st: f64,
}

fn sample(eq: &KawaharaEq, ts: &[f64]) -> Result<Vec<Sample>, ClassifyError> {
    let tapes = [eq.beta.compile(), eq.beta.diff("t").compile(), eq.sigma.compile(), eq.sigma.diff("t").compile()];
    ts.iter()
        .map(|&t| {
            let v: Vec<f64> = tapes
                .iter()
                .map(|tp| tp.eval(&[("t", t)]))
                .collect::<Result<_, _>>()
                .map_err(|e| ClassifyError::Evaluation(format!("at t = {t}: {e}")))?;
            Ok(Sample { t, b: v[0], bt: v[1], s: v[2], st: v[3] })
        })
        .collect()
}

/// The two rows of the classifying system at one sample, each divided by the
/// coefficient value so that the rows are scale-free.
fn rows(x: &Sample, n1: bool) -> [Vec<f64>; 2] {
    let (t, lb, ls) = (x.t, x.bt / x.b, x.st / x.s);
    if n1 {
        [
            vec![t * t * lb - t, t * lb, lb, -1.0],
            vec![t * t * ls - 3.0 * t, t * ls - 2.0 / 3.0, ls, -5.0 / 3.0],
        ]
    } else {
        [vec![t * lb, lb, -1.0], vec![t * ls - 2.0 / 3.0, ls, -5.0 / 3.0]]
    }
}

/// Relative sup-norm residual of both classifying equations on `samples`.
/// The scale includes `|pt² + qt + r|/L` (L the size of t on the domain) so
/// that rounding noise in a vanishing β_t is not mistaken for a residual.
fn verify(quad: &ClassifyingQuadruple, samples: &[Sample], n1: bool) -> f64 {
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    let lo = samples.iter().map(|x| x.t).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|x| x.t).fold(f64::NEG_INFINITY, f64::max);
    let len = lo.abs().max(hi.abs()).max(hi - lo);
    for x in samples {
        let ClassifyingQuadruple { p, q, r, .. } = *quad;
        let lead = if n1 { p * x.t * x.t + q * x.t + r } else { p * x.t + q };
        scale = scale.max(lead.abs() / len);
        let ClassifyingQuadruple { p, q, r, s } = *quad;
        let t = x.t;
        let (lhs_b, rhs_b, lhs_s, rhs_s) = if n1 {
            let a = p * t * t + q * t + r;
            (a * x.bt, (p * t + s) * x.b, a * x.st, (3.0 * p * t + (5.0 * s + 2.0 * q) / 3.0) * x.s)
        } else {
            let a = p * t + q;
            (a * x.bt, r * x.b, a * x.st, (5.0 * r + 2.0 * p) / 3.0 * x.s)
        };
        res = res.max(((lhs_b - rhs_b) / x.b).abs()).max(((lhs_s - rhs_s) / x.s).abs());
        scale = scale
            .max((lhs_b / x.b).abs())
            .max((rhs_b / x.b).abs())
            .max((lhs_s / x.s).abs())
            .max((rhs_s / x.s).abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        res / scale
    }
}

/// Finds the one-dimensional solution space of the classifying system for an
/// equation with α ≡ 1, or `None` when no nonzero quadruple satisfies it.
pub fn solve_classifying_system(
    eq: &KawaharaEq,
    opts: &ClassifyOptions,
) -> Result<Option<ClassifyingQuadruple>, ClassifyError> {
    let n1 = eq.n == 1.0;
    let cols = if n1 { 4 } else { 3 };
    let fit = sample(eq, &eq.domain.samples(opts.samples))?;
    let mut data = Vec::with_capacity(2 * fit.len() * cols);
    for x in &fit {
        for row in rows(x, n1) {
            data.extend(row);
        }
    }
    let mut a = DMatrix::from_row_slice(2 * fit.len(), cols, &data);
    // Column equilibration; the null vector is rescaled afterwards. Columns
    // at rounding level (e.g. β_t of a constant computed through an inverse
    // time map) are not blown up to unit size.
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let floor = 1e-8 * norms.iter().cloned().fold(0.0, f64::max);
    let col_scale: Vec<f64> = norms.iter().map(|v| v.max(floor).max(f64::MIN_POSITIVE)).collect();
    for (j, c) in col_scale.iter().enumerate() {
        a.column_mut(j).unscale_mut(*c);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| ClassifyError::Internal("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let max = sv.max();
    let null: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= opts.svd_rel * max).collect();
    match null.len() {
        0 => return Ok(None),
        1 => {}
        dim => return Err(ClassifyError::OverDetermined { dim }),
    }
    let w = v_t.row(null[0]);
    let v: Vec<f64> = (0..cols).map(|j| w[j] / col_scale[j]).collect();
    let norm = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    // Entries at rounding level are exact zeros of the true quadruple.
    let clean: Vec<f64> = v.iter().map(|x| if x.abs() <= 1e-10 * norm { 0.0 } else { *x }).collect();
    let raw = ClassifyingQuadruple { p: clean[0], q: clean[1], r: clean[2], s: if n1 { clean[3] } else { 0.0 } };
    let Some(quad) = raw.normalized() else {
        return Ok(None);
    };
    let check = sample(eq, &eq.domain.samples(ZERO_TEST_POINTS))?;
    if verify(&quad, &check, n1) > opts.verify_rel {
        return Ok(None);
    }
    Ok(Some(quad))
}

/// Case tag, canonical parameters and the equivalence transformation that
/// brings the gauged equation to the canonical form of its case.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub case: Case,
    pub rho: Option<f64>,
    /// ρ before the ρ ≥ 1/2 normalization (n = 1).
    pub rho_raw: Option<f64>,
    pub nu: Option<f64>,
    /// Exponential rate of the exponential cases before rescaling t.
    pub m: Option<f64>,
    pub params: EquivParams,
}

/// Numbers within this relative distance of a simple rational are snapped.
const SNAP: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    snap_rational(v, SNAP)
}

fn moebius(a: f64, b: f64, c: f64, d: f64) -> EquivParams {
    EquivParams::Moebius { a, b, c, d, e0: 0.0, e1: 0.0, e2: 1.0 }
}

/// Sign making `f` positive at the middle of the domain.
fn positive_at_mid(dom: &Domain, f: impl Fn(f64) -> f64) -> f64 {
    if f(0.5 * (dom.lo + dom.hi)) < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Reduces a normalized quadruple to the canonical set of its case. For n = 1
/// the triple (p, q, r) is classified by the sign of `D = q² − 4pr` and the
/// result normalized to ρ ≥ 1/2, ν ≥ 0.
pub fn canonicalize(quad: Option<ClassifyingQuadruple>, n: f64, dom: &Domain) -> Result<Canonical, ClassifyError> {
    let none = |case| Canonical {
        case,
        rho: None,
        rho_raw: None,
        nu: None,
        m: None,
        params: EquivParams::identity_usual(),
    };
    let n1 = n == 1.0;
    let Some(ClassifyingQuadruple { p, q, r, s }) = quad else {
        return Ok(none(if n1 { Case::C0p } else { Case::C0 }));
    };
    let mag = p.abs().max(q.abs()).max(r.abs());
    let tiny = |v: f64| v.abs() <= 1e-10 * mag;
    if !n1 {
        if !tiny(p) {
            let rho = snap(r / p);
            let h = q / p;
            let eps = positive_at_mid(dom, |t| t + h);
            let params = EquivParams::GaugedScaling { d0: eps * h, d1: eps, d2: 0.0, d3: 1.0 };
            return Ok(Canonical { case: Case::C1, rho: Some(rho), rho_raw: Some(rho), nu: None, m: None, params });
        }
        let m = r / q;
        if tiny(r) {
            return Ok(none(Case::C3));
        }
        let params = EquivParams::GaugedScaling { d0: 0.0, d1: m, d2: 0.0, d3: 1.0 };
        return Ok(Canonical { case: Case::C2, rho: None, rho_raw: None, nu: None, m: Some(m), params });
    }

    let d = q * q - 4.0 * p * r;
    let d_zero = d.abs() <= 1e-9 * (q * q + 4.0 * (p * r).abs());
    if d_zero {
        if tiny(p) {
            // q = 0 as well: rβ_t = sβ.
            let m = s / r;
            if s.abs() <= 1e-10 * r.abs() {
                return Ok(none(Case::C3p));
            }
            return Ok(Canonical {
                case: Case::C2p,
                rho: None,
                rho_raw: None,
                nu: None,
                m: Some(m),
                params: moebius(m, 0.0, 0.0, 1.0),
            });
        }
        let t1 = -q / (2.0 * p);
        let k = (p * t1 + s) / p;
        let scale = t1.abs().max(s.abs() / p.abs()).max(1.0);
        if k.abs() <= 1e-10 * scale {
            return Ok(Canonical {
                case: Case::C3p,
                rho: None,
                rho_raw: None,
                nu: None,
                m: None,
                params: moebius(0.0, -1.0, 1.0, -t1),
            });
        }
        return Ok(Canonical {
            case: Case::C2p,
            rho: None,
            rho_raw: None,
            nu: None,
            m: None,
            params: moebius(0.0, -k, 1.0, -t1),
        });
    }
    if d > 0.0 {
        if tiny(p) {
            let rho_raw = snap(s / q);
            let h = r / q;
            if rho_raw >= 0.5 {
                let eps = positive_at_mid(dom, |t| t + h);
                let params = moebius(eps, eps * h, 0.0, 1.0);
                return Ok(power_case(rho_raw, rho_raw, params));
            }
            let eps = positive_at_mid(dom, |t| 1.0 / (t + h));
            let params = moebius(0.0, eps, 1.0, h);
            return Ok(power_case(1.0 - rho_raw, rho_raw, params));
        }
        let sq = d.sqrt();
        let (r1, r2) = ((-q + sq) / (2.0 * p), (-q - sq) / (2.0 * p));
        let exponent = |t1: f64, t2: f64| (p * t1 + s) / (p * (t1 - t2));
        let rho_raw = snap(exponent(r1, r2));
        let (t1, t2, rho) = if rho_raw >= 0.5 { (r1, r2, rho_raw) } else { (r2, r1, snap(exponent(r2, r1))) };
        let eps = positive_at_mid(dom, |t| (t - t1) / (t - t2));
        return Ok(power_case(rho, rho_raw, moebius(eps, -eps * t1, 1.0, -t2)));
    }
    let mu = -q / (2.0 * p);
    let theta = (-d).sqrt() / (2.0 * p.abs());
    let nu_raw = (p * mu + s) / (3.0 * p * theta);
    let eps = if nu_raw < 0.0 { -1.0 } else { 1.0 };
    Ok(Canonical {
        case: Case::C4p,
        rho: None,
        rho_raw: None,
        nu: Some(snap(nu_raw.abs())),
        m: None,
        params: moebius(eps / theta, -eps * mu / theta, 0.0, 1.0),
    })
}

fn power_case(rho: f64, rho_raw: f64, params: EquivParams) -> Canonical {
    Canonical { case: Case::C1p, rho: Some(rho), rho_raw: Some(rho_raw), nu: None, m: None, params }
}

/// `(β, σ)` of the canonical form with λ = δ = 1.
pub fn canonical_forms(case: Case, rho: Option<f64>, nu: Option<f64>) -> Option<(Expr, Expr)> {
    let t = Expr::t();
    Some(match case {
        Case::C0 | Case::C0p => return None,
        Case::C1 | Case::C1p => {
            let rho = rho?;
            (Expr::powf(t.clone(), rho), Expr::powf(t, (5.0 * rho + 2.0) / 3.0))
        }
        Case::C2 | Case::C2p => (Expr::exp(t.clone()), Expr::exp(5.0 / 3.0 * t)),
        Case::C3 | Case::C3p => (Expr::one(), Expr::one()),
        Case::C4p => {
            let nu = nu?;
            let q = t.clone() * t.clone() + 1.0;
            let at = Expr::arctan(t);
            (
                Expr::sqrt(q.clone()) * Expr::exp(3.0 * nu * at.clone()),
                Expr::powf(q, 1.5) * Expr::exp(5.0 * nu * at),
            )
        }
    })
}
