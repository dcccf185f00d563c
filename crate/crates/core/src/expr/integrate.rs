//! Antiderivatives on a closed subset of the DSL, with adaptive
//! Gauss–Kronrod quadrature as the fallback.

use std::sync::Arc;

use thiserror::Error;

use super::{Expr, Func, Node, NumericFn};

/// Result of [`Expr::antiderivative`].
#[derive(Debug, Clone, PartialEq)]
pub enum Antiderivative {
    /// Closed form with zero integration constant.
    Exact(Expr),
    /// The integrand is outside the closed subset.
    Quadrature,
}

impl Antiderivative {
    pub fn exact(self) -> Option<Expr> {
        match self {
            Antiderivative::Exact(e) => Some(e),
            Antiderivative::Quadrature => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integrand failed at {at}: {reason}")]
    Integrand { at: f64, reason: String },
    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Tolerance { tol: f64, estimate: f64 },
}

const MAX_POLY_POWER: f64 = 16.0;

/// Coefficients c₀, c₁, … of a polynomial in `var`, if `e` is one.
fn polynomial(e: &Expr, var: &str) -> Option<Vec<Expr>> {
    if !e.depends_on(var) {
        return Some(vec![e.clone()]);
    }
    match e.node() {
        Node::Var(_) => Some(vec![Expr::zero(), Expr::one()]),
        Node::Neg(a) => Some(polynomial(a, var)?.into_iter().map(Expr::neg).collect()),
        Node::Add(a, b) | Node::Sub(a, b) => {
            let (pa, pb) = (polynomial(a, var)?, polynomial(b, var)?);
            let minus = matches!(e.node(), Node::Sub(..));
            let n = pa.len().max(pb.len());
            Some(
                (0..n)
                    .map(|i| {
                        let x = pa.get(i).cloned().unwrap_or_else(Expr::zero);
                        let y = pb.get(i).cloned().unwrap_or_else(Expr::zero);
                        if minus {
                            Expr::sub(x, y)
                        } else {
                            Expr::add(x, y)
                        }
                    })
                    .collect(),
            )
        }
        Node::Mul(a, b) => Some(poly_mul(&polynomial(a, var)?, &polynomial(b, var)?)),
        Node::Div(a, b) if !b.depends_on(var) => {
            Some(polynomial(a, var)?.into_iter().map(|c| Expr::div(c, b.clone())).collect())
        }
        Node::Pow(a, k) => {
            let k = constant_value(k)?;
            if k < 0.0 || k.fract() != 0.0 || k > MAX_POLY_POWER {
                return None;
            }
            let base = polynomial(a, var)?;
            Some((0..k as usize).fold(vec![Expr::one()], |acc, _| poly_mul(&acc, &base)))
        }
        _ => None,
    }
}

fn poly_mul(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let mut out = vec![Expr::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = Expr::add(out[i + j].clone(), Expr::mul(x.clone(), y.clone()));
        }
    }
    out
}

/// Value of an expression with no free variables.
fn constant_value(e: &Expr) -> Option<f64> {
    if e.free_vars().is_empty() {
        e.eval(&[("", 0.0)]).ok()
    } else {
        None
    }
}

/// `(slope, intercept)` if `e` is linear in `var` with nonzero slope.
fn linear(e: &Expr, var: &str) -> Option<(Expr, Expr)> {
    let p = polynomial(e, var)?;
    if p.len() != 2 || p[1].is_const(0.0) {
        return None;
    }
    Some((p[1].clone(), p[0].clone()))
}

fn exact(e: &Expr, var: &str) -> Option<Expr> {
    let v = Expr::var(var);
    if !e.depends_on(var) {
        return Some(Expr::mul(e.clone(), v));
    }
    if let Some(coeffs) = polynomial(e, var) {
        let terms = coeffs.into_iter().enumerate().map(|(k, c)| {
            let power = (k + 1) as f64;
            Expr::div(Expr::mul(c, Expr::powf(v.clone(), power)), Expr::constant(power))
        });
        return Some(Expr::sum(terms));
    }
    match e.node() {
        Node::Neg(a) => Some(Expr::neg(exact(a, var)?)),
        Node::Add(a, b) => Some(Expr::add(exact(a, var)?, exact(b, var)?)),
        Node::Sub(a, b) => Some(Expr::sub(exact(a, var)?, exact(b, var)?)),
        Node::Mul(a, b) if !a.depends_on(var) => Some(Expr::mul(a.clone(), exact(b, var)?)),
        Node::Mul(a, b) if !b.depends_on(var) => Some(Expr::mul(exact(a, var)?, b.clone())),
        Node::Div(a, b) if !b.depends_on(var) => Some(Expr::div(exact(a, var)?, b.clone())),
        Node::Div(c, den) if !c.depends_on(var) => {
            // c / L^a with L linear
            let (base, power) = match den.node() {
                Node::Pow(l, k) if !k.depends_on(var) => (l.clone(), k.clone()),
                _ => (den.clone(), Expr::one()),
            };
            let (slope, _) = linear(&base, var)?;
            Some(Expr::mul(c.clone(), power_of_linear(&base, &slope, &Expr::neg(power))))
        }
        Node::Pow(base, k) if !k.depends_on(var) => {
            let (slope, _) = linear(base, var)?;
            Some(power_of_linear(base, &slope, k))
        }
        Node::Pow(base, l) if !base.depends_on(var) => {
            // b^L = exp(L ln b)
            let (slope, _) = linear(l, var)?;
            Some(Expr::div(e.clone(), Expr::mul(Expr::ln(base.clone()), slope)))
        }
        Node::Func(f, arg) => {
            let (slope, _) = linear(arg, var)?;
            let prim = match f {
                Func::Exp => e.clone(),
                Func::Sqrt => Expr::mul(Expr::constant(2.0 / 3.0), Expr::powf(arg.clone(), 1.5)),
                Func::Sin => Expr::neg(Expr::func(Func::Cos, arg.clone())),
                Func::Cos => Expr::func(Func::Sin, arg.clone()),
                _ => return None,
            };
            Some(Expr::div(prim, slope))
        }
        _ => None,
    }
}

/// ∫ L^k with L linear of the given slope.
fn power_of_linear(base: &Expr, slope: &Expr, k: &Expr) -> Expr {
    if constant_value(k) == Some(-1.0) {
        return Expr::div(Expr::ln(base.clone()), slope.clone());
    }
    let k1 = Expr::add(k.clone(), Expr::one());
    Expr::div(Expr::pow(base.clone(), k1.clone()), Expr::mul(k1, slope.clone()))
}

impl Expr {
    /// Antiderivative with respect to `var` on the closed subset
    /// (polynomials, powers and exponentials of linear arguments, reciprocals
    /// of linear functions, and linear combinations of these).
    pub fn antiderivative(&self, var: &str) -> Antiderivative {
        match exact(self, var) {
            Some(e) => Antiderivative::Exact(e),
            None => Antiderivative::Quadrature,
        }
    }

    /// `∫_base^var e d(var)` as an expression: exact when possible (shifted so
    /// that it vanishes at `base`), otherwise a quadrature-backed node.
    pub fn definite_integral(&self, var: &str, base: f64) -> Expr {
        match self.antiderivative(var) {
            Antiderivative::Exact(f) => {
                let at_base = f.bind(&[(var, base)]);
                Expr::sub(f, at_base)
            }
            Antiderivative::Quadrature => self.quadrature_integral(var, base),
        }
    }

    /// `∫_base^var e d(var)` evaluated by adaptive quadrature on demand.
    pub fn quadrature_integral(&self, var: &str, base: f64) -> Expr {
        let integrand = Arc::new(QuadIntegral::new(self.clone(), var, base));
        Expr::apply(integrand, Expr::var(var))
    }
}

/// `s ↦ ∫_base^s f(v) dv` for a one-variable integrand.
#[derive(Debug)]
pub struct QuadIntegral {
    integrand: Expr,
    var: String,
    base: f64,
    name: String,
    tape: super::Tape,
}

impl QuadIntegral {
    pub fn new(integrand: Expr, var: &str, base: f64) -> Self {
        let name = format!("integral[{integrand} d{var} from {base}]");
        let tape = integrand.compile();
        QuadIntegral { integrand, var: var.to_string(), base, name, tape }
    }
}

impl NumericFn for QuadIntegral {
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, s: f64) -> Result<f64, String> {
        let f = |v: f64| {
            self.tape
                .eval(&[(self.var.as_str(), v)][..])
                .map_err(|e| e.to_string())
        };
        gauss_kronrod(f, self.base, s, 1e-12).map_err(|e| e.to_string())
    }

    fn derivative(&self, _applied: &Expr, arg: &Expr) -> Expr {
        self.integrand.subst_one(&self.var, arg)
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadratureError>
where
    F: Fn(f64) -> Result<f64, String>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |x: f64| f(x).map_err(|reason| QuadratureError::Integrand { at: x, reason });
    let fc = eval(c)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, &x) in XGK[..7].iter().enumerate() {
        let pair = eval(c - h * x)? + eval(c + h * x)?;
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Adaptive G7–K15 quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol` (the interval may be reversed).
pub fn gauss_kronrod<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError>
where
    F: Fn(f64) -> Result<f64, String>,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return gauss_kronrod(f, b, a, tol).map(|v| -v);
    }
    let mut pending = vec![(a, b, gk15(&f, a, b)?)];
    let mut total = 0.0;
    let mut err_total = 0.0;
    let width = b - a;
    while let Some((lo, hi, (val, err))) = pending.pop() {
        let share = tol * (hi - lo) / width;
        let tiny = (hi - lo) <= width * 1e-12 || (hi - lo) <= f64::EPSILON * lo.abs().max(hi.abs()) * 8.0;
        // Accept when the local error is small in absolute or relative terms.
        if err <= share.max(1e-15 * val.abs()) || tiny {
            total += val;
            err_total += err;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        pending.push((lo, mid, gk15(&f, lo, mid)?));
        pending.push((mid, hi, gk15(&f, mid, hi)?));
    }
    if err_total > 1e3 * tol.max(1e-14 * total.abs()) {
        return Err(QuadratureError::Tolerance { tol, estimate: err_total });
    }
    Ok(total)
}
