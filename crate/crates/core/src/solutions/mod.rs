//! Closed-form solution families, exact residual checks by symbolic
//! differentiation, and the two zero-order conservation laws.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{linspace, Domain, Expr, Tape};
use crate::model::{integral_of_alpha, KawaharaEq, ModelError};

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("this family needs n = {expected}, got n = {got}")]
    WrongN { expected: f64, got: f64 },
    #[error("denominator ∫α dt + a changes sign or vanishes near t = {0}")]
    DenominatorRoot(f64),
    #[error("need σ̃ < 0 for a real √(−10σ̃), got σ̃ = {0}")]
    SigmaSign(f64),
    #[error("need β̃σ̃ < 0 for the real branches, got β̃ = {beta}, σ̃ = {sigma}")]
    ProductSign { beta: f64, sigma: f64 },
    #[error("branch {0} has complex κ; only branches 1 and 2 are real")]
    ComplexBranch(u8),
    #[error("branch must be 1 to 6, got {0}")]
    BadBranch(u8),
    #[error("coefficients are not of the required form: {0}")]
    Form(String),
    #[error("∫α dt has no closed form for α = {0}; this family needs one")]
    QuadratureOnly(String),
    #[error("candidate fails to evaluate: {0}")]
    Evaluation(String),
}

/// A candidate `u(t, x)` together with the equation it is meant to solve.
#[derive(Debug, Clone)]
pub struct ClosedFormSolution {
    pub label: String,
    pub u: Expr,
    pub equation: KawaharaEq,
    /// x-range of the validity grid; t ranges over the equation's domain.
    pub x_range: (f64, f64),
    pub params: BTreeMap<String, f64>,
}

impl ClosedFormSolution {
    fn new(label: &str, u: Expr, equation: KawaharaEq, params: &[(&str, f64)]) -> Self {
        ClosedFormSolution {
            label: label.into(),
            u,
            equation,
            x_range: (-5.0, 5.0),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// The default 21×21 validity grid.
    pub fn grid(&self) -> Grid2 {
        Grid2::over(&self.equation.domain, self.x_range, 21, 21)
    }
}

impl Serialize for ClosedFormSolution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ClosedFormSolution", 5)?;
        st.serialize_field("label", &self.label)?;
        st.serialize_field("u", &self.u.to_string())?;
        st.serialize_field("equation", &self.equation)?;
        st.serialize_field("x_range", &self.x_range)?;
        st.serialize_field("params", &self.params)?;
        st.end()
    }
}

/// Tensor grid in (t, x).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid2 {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
}

impl Default for Grid2 {
    fn default() -> Self {
        Grid2 { t: linspace(1.0, 2.0, 21), x: linspace(-5.0, 5.0, 21) }
    }
}

impl Grid2 {
    pub fn new(t: Vec<f64>, x: Vec<f64>) -> Self {
        Grid2 { t, x }
    }

    pub fn over(dom: &Domain, x: (f64, f64), nt: usize, nx: usize) -> Self {
        Grid2 { t: linspace(dom.lo, dom.hi, nt), x: linspace(x.0, x.1, nx) }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().flat_map(move |&t| self.x.iter().map(move |&x| (t, x)))
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of `e(t, x)` on the grid, t-major; NaN where undefined.
    pub fn sample(&self, e: &Expr) -> Vec<f64> {
        let tape = e.compile();
        self.points().map(|(t, x)| tape.eval(&[("t", t), ("x", x)]).unwrap_or(f64::NAN)).collect()
    }
}

/// Sup-norm of a sum of terms over a grid, with the largest single term
/// magnitude as scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    pub scale: f64,
    pub normalized: f64,
    /// Grid points where some term was undefined.
    pub flagged: usize,
}

impl Residual {
    fn over(terms: &[Expr], grid: &Grid2) -> Residual {
        let tapes: Vec<Tape> = terms.iter().map(Expr::compile).collect();
        let (mut max_abs, mut scale, mut flagged) = (0.0f64, 0.0f64, 0);
        for (t, x) in grid.points() {
            let vals: Result<Vec<f64>, _> = tapes.iter().map(|tp| tp.eval(&[("t", t), ("x", x)])).collect();
            match vals {
                Ok(v) if v.iter().all(|a| a.is_finite()) => {
                    max_abs = max_abs.max(v.iter().sum::<f64>().abs());
                    scale = scale.max(v.iter().fold(0.0, |m, a| m.max(a.abs())));
                }
                _ => flagged += 1,
            }
        }
        let normalized = if scale > 0.0 { max_abs / scale } else { max_abs };
        Residual { max_abs, scale, normalized, flagged }
    }
}

/// `u_t + αuⁿu_x + βu_xxx + σu_xxxxx` of the candidate on the grid.
pub fn pde_residual(eq: &KawaharaEq, u: &Expr, grid: &Grid2) -> Residual {
    Residual::over(&eq.residual_terms(u), grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conservation {
    /// Characteristic 1: density u.
    pub momentum: Residual,
    /// Characteristic u: density u²/2.
    pub energy: Residual,
}

/// `∫uᵐ du` as used in the fluxes: `uᵐ⁺¹/(m+1)`, or `ln u` for m = −1.
fn power_primitive(u: &Expr, m: f64) -> Expr {
    if m == -1.0 {
        Expr::ln(u.clone())
    } else {
        Expr::powf(u.clone(), m + 1.0) / (m + 1.0)
    }
}

/// `D_t(density) + D_x(flux)` for the conserved vectors with
/// characteristics 1 and u, each split into terms for normalization.
pub fn conservation_check(eq: &KawaharaEq, u: &Expr, grid: &Grid2) -> Conservation {
    let (a, b, s, n) = (&eq.alpha, &eq.beta, &eq.sigma, eq.n);
    let ux = u.diff("x");
    let uxx = ux.diff("x");
    let uxxx = uxx.diff("x");
    let uxxxx = uxxx.diff("x");
    let dx = |e: Expr| e.diff("x");

    let momentum = [
        u.diff("t"),
        dx(a.clone() * power_primitive(u, n)),
        dx(b.clone() * uxx.clone()),
        dx(s.clone() * uxxxx.clone()),
    ];
    let energy = [
        (0.5 * u.clone() * u.clone()).diff("t"),
        dx(a.clone() * power_primitive(u, n + 1.0)),
        dx(b.clone() * (u.clone() * uxx.clone() - 0.5 * ux.clone() * ux.clone())),
        dx(s.clone() * (u.clone() * uxxxx - ux * uxxx + 0.5 * uxx.clone() * uxx)),
    ];
    Conservation { momentum: Residual::over(&momentum, grid), energy: Residual::over(&energy, grid) }
}

/// Ratio `num/den` if it is constant on the domain (relative spread ≤ 1e-9).
fn constant_ratio(num: &Expr, den: &Expr, dom: &Domain, what: &str) -> Result<f64, SolutionError> {
    let tape = (num.clone() / den.clone()).compile();
    let vals: Vec<f64> = dom
        .samples(crate::expr::ZERO_TEST_POINTS)
        .into_iter()
        .map(|t| tape.eval(&[("t", t)]).map_err(|e| SolutionError::Evaluation(e.to_string())))
        .collect::<Result<_, _>>()?;
    let v0 = vals[0];
    if vals.iter().any(|v| (v - v0).abs() > 1e-9 * v0.abs()) {
        return Err(SolutionError::Form(format!("{what} is not constant")));
    }
    Ok(v0)
}

/// `u = (x + c)/(∫α dt + a)` for n = 1, any β and σ.
pub fn degenerate_solution(eq: &KawaharaEq, c: f64, a: f64) -> Result<ClosedFormSolution, SolutionError> {
    if eq.n != 1.0 {
        return Err(SolutionError::WrongN { expected: 1.0, got: eq.n });
    }
    let den = integral_of_alpha(eq) + a;
    let tape = den.compile();
    let mut sign = 0.0;
    for t in linspace(eq.domain.lo, eq.domain.hi, 257) {
        let v = tape.eval(&[("t", t)]).map_err(|e| SolutionError::Evaluation(e.to_string()))?;
        if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
            return Err(SolutionError::DenominatorRoot(t));
        }
        sign = v.signum();
    }
    let u = (Expr::x() + c) / den;
    Ok(ClosedFormSolution::new("degenerate", u, eq.clone(), &[("c", c), ("a", a)]))
}

/// `u_t + αuⁿu_x + β̃αu_xxx + σ̃αu_xxxxx = 0`.
pub fn proportional_equation(n: f64, alpha: Expr, beta_t: f64, sigma_t: f64, domain: Domain) -> Result<KawaharaEq, SolutionError> {
    Ok(KawaharaEq::new(n, alpha.clone(), beta_t * alpha.clone(), sigma_t * alpha, domain)?)
}

/// For n = 2 and β = β̃α, σ = σ̃α with σ̃ < 0:
/// `u = (40k²σ̃ − β̃)/√(−10σ̃) + 6k²√(−10σ̃)·tanh²(kx + (k/(10σ̃))(240k⁴σ̃² + β̃²)∫α dt + χ)`.
pub fn tanh_solution_n2(eq: &KawaharaEq, k: f64, chi: f64) -> Result<ClosedFormSolution, SolutionError> {
    if eq.n != 2.0 {
        return Err(SolutionError::WrongN { expected: 2.0, got: eq.n });
    }
    let bt = constant_ratio(&eq.beta, &eq.alpha, &eq.domain, "β/α")?;
    let st = constant_ratio(&eq.sigma, &eq.alpha, &eq.domain, "σ/α")?;
    if st >= 0.0 {
        return Err(SolutionError::SigmaSign(st));
    }
    let r = (-10.0 * st).sqrt();
    let speed = k / (10.0 * st) * (240.0 * k.powi(4) * st * st + bt * bt);
    let phase = k * Expr::x() + speed * integral_of_alpha(eq) + chi;
    let th = Expr::tanh(phase);
    let u = (40.0 * k * k * st - bt) / r + 6.0 * k * k * r * th.clone() * th;
    Ok(ClosedFormSolution::new(
        "tanh_n2",
        u,
        eq.clone(),
        &[("beta_tilde", bt), ("sigma_tilde", st), ("k", k), ("chi", chi)],
    ))
}

/// κ of a branch: `±√(−13β̃σ̃)/(26σ̃)` for branches 1, 2.
pub fn kudryashov_kappa(beta_t: f64, sigma_t: f64, branch: u8) -> Result<f64, SolutionError> {
    match branch {
        1 | 2 => {
            if !(beta_t * sigma_t < 0.0) {
                return Err(SolutionError::ProductSign { beta: beta_t, sigma: sigma_t });
            }
            let k = (-13.0 * beta_t * sigma_t).sqrt() / (26.0 * sigma_t);
            Ok(if branch == 1 { k } else { -k })
        }
        3..=6 => Err(SolutionError::ComplexBranch(branch)),
        b => Err(SolutionError::BadBranch(b)),
    }
}

/// The family `ũ(t̃, x̃)` of the constant-coefficient n = 1 equation as an
/// expression in given `t̃`, `x̃` expressions.
fn kudryashov_expr(alpha_t: f64, beta_t: f64, sigma_t: f64, kappa: f64, mu: f64, chi: f64, tt: Expr, xt: Expr) -> Expr {
    let (a, b, s, k) = (alpha_t, beta_t, sigma_t, kappa);
    let c0 = -(264992.0 * s * s * k.powi(5) - 7280.0 * b * s * k.powi(3) - 31.0 * b * b * k + 507.0 * s * mu)
        / (507.0 * a * s * k);
    let c2 = -280.0 * k * k * (b - 104.0 * s * k * k) / (13.0 * a);
    let c4 = -1680.0 * s * k.powi(4) / a;
    let th = Expr::tanh(k * xt + mu * tt + chi);
    let th2 = th.clone() * th;
    c0 + c2 * th2.clone() + c4 * th2.clone() * th2
}

/// Solitary waves of `ũ_t + α̃ũũ_x + β̃ũ_xxx + σ̃ũ_xxxxx = 0` (real branches).
pub fn kudryashov_family(
    alpha_t: f64,
    beta_t: f64,
    sigma_t: f64,
    branch: u8,
    mu: f64,
    chi: f64,
    domain: &Domain,
) -> Result<ClosedFormSolution, SolutionError> {
    let kappa = kudryashov_kappa(beta_t, sigma_t, branch)?;
    let eq = KawaharaEq::new(
        1.0,
        Expr::constant(alpha_t),
        Expr::constant(beta_t),
        Expr::constant(sigma_t),
        domain.clone(),
    )?;
    let u = kudryashov_expr(alpha_t, beta_t, sigma_t, kappa, mu, chi, Expr::t(), Expr::x());
    Ok(ClosedFormSolution::new(
        "kudryashov",
        u,
        eq,
        &[("branch", branch as f64), ("kappa", kappa), ("mu", mu), ("chi", chi)],
    ))
}

/// The family carried to `u_t + αuu_x + β̃αDu_xxx + σ̃αD³u_xxxxx = 0`,
/// `D = δ₃∫α dt + δ₄`, via `t̃ = ∫αD⁻² dt`, `x̃ = (x + δ₁)/D`,
/// `ũ = Du − δ₃(x + δ₁)` (α̃ = 1).
pub fn mapped_kudryashov(
    eq: &KawaharaEq,
    d1: f64,
    d3: f64,
    d4: f64,
    mu: f64,
    chi: f64,
    branch: u8,
) -> Result<ClosedFormSolution, SolutionError> {
    if eq.n != 1.0 {
        return Err(SolutionError::WrongN { expected: 1.0, got: eq.n });
    }
    if d3 == 0.0 && d4 == 0.0 {
        return Err(SolutionError::Form("δ₃² + δ₄² must be nonzero".into()));
    }
    let s = eq.alpha.antiderivative("t").exact().ok_or_else(|| SolutionError::QuadratureOnly(eq.alpha.to_string()))?;
    let big_d = d3 * s.clone() + d4;
    let bt = constant_ratio(&eq.beta, &(eq.alpha.clone() * big_d.clone()), &eq.domain, "β/(αD)")?;
    let st = constant_ratio(&eq.sigma, &(eq.alpha.clone() * Expr::powf(big_d.clone(), 3.0)), &eq.domain, "σ/(αD³)")?;
    let kappa = kudryashov_kappa(bt, st, branch)?;
    // ∫αD⁻² dt in closed form
    let tt = if d3 != 0.0 { -1.0 / (d3 * big_d.clone()) } else { s / (d4 * d4) };
    let xt = (Expr::x() + d1) / big_d.clone();
    let ut = kudryashov_expr(1.0, bt, st, kappa, mu, chi, tt, xt);
    let u = (ut + d3 * (Expr::x() + d1)) / big_d;
    Ok(ClosedFormSolution::new(
        "mapped_kudryashov",
        u,
        eq.clone(),
        &[
            ("delta1", d1),
            ("delta3", d3),
            ("delta4", d4),
            ("beta_tilde", bt),
            ("sigma_tilde", st),
            ("branch", branch as f64),
            ("kappa", kappa),
            ("mu", mu),
            ("chi", chi),
        ],
    ))
}

/// The form `β = β̃αD`, `σ = σ̃αD³` built from α and the constants.
pub fn form14_equation(alpha: Expr, beta_t: f64, sigma_t: f64, d3: f64, d4: f64, domain: Domain) -> Result<KawaharaEq, SolutionError> {
    let s = alpha.antiderivative("t").exact().ok_or_else(|| SolutionError::QuadratureOnly(alpha.to_string()))?;
    let big_d = d3 * s + d4;
    Ok(KawaharaEq::new(
        1.0,
        alpha.clone(),
        beta_t * alpha.clone() * big_d.clone(),
        sigma_t * alpha * Expr::powf(big_d, 3.0),
        domain,
    )?)
}

#[cfg(test)]
mod tests;
