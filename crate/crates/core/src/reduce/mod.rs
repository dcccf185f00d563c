//! Similarity reductions with respect to the optimal subalgebras, the
//! boundary value problem that reduces to an initial value problem, and
//! reconstruction of u(t, x) from an integrated invariant solution.

mod grid;

use serde::Serialize;
use thiserror::Error;

use crate::classify::{optimal_subalgebras, Case, ClassificationResult, ClassifyError, ParamDomain};
use crate::expr::{Domain, Expr, OMEGA};
use crate::model::{EquivParams, KawaharaEq, ModelError, PointTransform};

pub use grid::{dense_phi, reconstruct, reconstruct_dx, GridSolution};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("the subalgebra ⟨∂_x⟩ gives u = const only; no reduction is built for g0")]
    Kernel,
    #[error("subalgebra {label} is not in the optimal system of case {case}")]
    Mismatch { case: String, label: String },
    #[error("subalgebra {label} needs a parameter {name}")]
    MissingParam { label: String, name: &'static str },
    #[error("parameter value {value} is not admissible for subalgebra {label}")]
    BadParam { label: String, value: f64 },
    #[error("subalgebra g3'.2 with a = 0 has no ansatz (u = 2t/a + φ(ω) divides by a)")]
    ZeroA,
    #[error("boundary value γ0 must be nonzero")]
    ZeroGamma0,
    #[error("invalid boundary value problem: {0}")]
    Bvp(String),
    #[error("the reduced equation of {0} is first order and has a closed-form solution; nothing to integrate")]
    FirstOrder(String),
}

/// `δφ⁽⁵⁾ + λφ''' + (φⁿ + c₁ω + c₀)φ' + c₂φ + c₃ω + c₄ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalForm {
    pub n: f64,
    pub lambda: f64,
    pub delta: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl NormalForm {
    fn basic(n: f64, lambda: f64, delta: f64) -> Self {
        NormalForm { n, lambda, delta, c0: 0.0, c1: 0.0, c2: 0.0, c3: 0.0, c4: 0.0 }
    }

    fn power(&self, phi: f64) -> Result<f64, String> {
        let n = self.n;
        let v = if n.fract() == 0.0 && n.abs() < 64.0 {
            phi.powi(n as i32)
        } else if phi >= 0.0 {
            phi.powf(n)
        } else {
            return Err(format!("φ = {phi} < 0 with non-integer n = {n}"));
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("φⁿ not finite at φ = {phi}"))
        }
    }

    /// The six terms of the left-hand side for state `(φ, …, φ'''')` and a
    /// given φ⁽⁵⁾.
    pub fn terms(&self, w: f64, y: &[f64], phi5: f64) -> Result<[f64; 6], String> {
        Ok([
            self.delta * phi5,
            self.lambda * y[3],
            (self.power(y[0])? + self.c1 * w + self.c0) * y[1],
            self.c2 * y[0],
            self.c3 * w,
            self.c4,
        ])
    }

    /// First-order system for `(φ, φ', φ'', φ''', φ'''')`.
    pub fn rhs(&self, w: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String> {
        dy[..4].copy_from_slice(&y[1..5]);
        let rest: f64 = self.terms(w, y, 0.0)?.iter().sum();
        dy[4] = -rest / self.delta;
        Ok(())
    }

    /// The left-hand side applied to `φ(ω)` given as an expression in `omega`.
    pub fn lhs_expr(&self, phi: &Expr) -> Expr {
        let w = Expr::omega();
        let d1 = phi.diff(OMEGA);
        let d3 = d1.diff_n(OMEGA, 2);
        let d5 = d3.diff_n(OMEGA, 2);
        let pn = if self.n == 1.0 { phi.clone() } else { Expr::powf(phi.clone(), self.n) };
        self.delta * d5
            + self.lambda * d3
            + (pn + self.c1 * w.clone() + self.c0) * d1
            + self.c2 * phi.clone()
            + self.c3 * w
            + self.c4
    }

    pub fn describe(&self) -> String {
        let mut s = format!("{}*phi''''' + {}*phi''' + (phi^{}", self.delta, self.lambda, self.n);
        if self.c1 != 0.0 {
            s += &format!(" + {}*omega", self.c1);
        }
        if self.c0 != 0.0 {
            s += &format!(" + {}", self.c0);
        }
        s += ")*phi'";
        for (c, tail) in [(self.c2, "*phi"), (self.c3, "*omega"), (self.c4, "")] {
            if c != 0.0 {
                s += &format!(" + {c}{tail}");
            }
        }
        s + " = 0"
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReducedOde {
    Fifth(NormalForm),
    /// `(ω + a)φ' + φ = 0`, solved by `φ = C/(ω + a)`.
    FirstOrder { a: f64 },
}

/// An ansatz `ũ = P(t̃)φ(ω) + Q(t̃, x̃)`, `ω = ω(t̃, x̃)`, in the variables of
/// a canonical equation, together with the transform into those variables.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub case: Case,
    pub subalgebra: String,
    pub param: Option<f64>,
    /// ω(t, x) in canonical variables.
    pub omega: Expr,
    /// P(t)
    pub scale: Expr,
    /// Q(t, x)
    pub shift: Expr,
    pub ode: ReducedOde,
    /// PDE residual of the ansatz = factor · (ODE left-hand side at ω).
    pub factor: Expr,
    /// Equation the ansatz reduces.
    pub equation: KawaharaEq,
    /// From the input variables to those of `equation`.
    pub transform: PointTransform,
    pub notes: Vec<String>,
}

impl Reduction {
    pub fn normal_form(&self) -> Option<&NormalForm> {
        match &self.ode {
            ReducedOde::Fifth(nf) => Some(nf),
            ReducedOde::FirstOrder { .. } => None,
        }
    }

    /// `ũ(t, x)` for `φ` given as an expression in `omega`.
    pub fn ansatz(&self, phi: &Expr) -> Expr {
        self.scale.clone() * phi.subst_one(OMEGA, &self.omega) + self.shift.clone()
    }

    /// PDE residual of the ansatz minus `factor` times the reduced ODE, for
    /// an arbitrary φ. Identically zero when the reduction is correct.
    pub fn ansatz_defect(&self, phi: &Expr) -> Expr {
        let lhs = match &self.ode {
            ReducedOde::Fifth(nf) => nf.lhs_expr(phi),
            ReducedOde::FirstOrder { a } => (Expr::omega() + *a) * phi.diff(OMEGA) + phi.clone(),
        };
        self.equation.residual_expr(&self.ansatz(phi)) - self.factor.clone() * lhs.subst_one(OMEGA, &self.omega)
    }

    /// For first-order rows: the solution family `u(t, x)` of the input
    /// equation, with free constant `C`.
    pub fn closed_form(&self) -> Option<Expr> {
        match self.ode {
            ReducedOde::FirstOrder { a } => {
                let phi = Expr::var("C") / (Expr::omega() + a);
                Some(self.transform.inverse().ok()?.push_solution(&self.ansatz(&phi)))
            }
            ReducedOde::Fifth(_) => None,
        }
    }

    pub fn ansatz_text(&self) -> String {
        let mut s = format!("u = ({})*phi(omega)", self.scale);
        if !self.shift.is_const(0.0) {
            s += &format!(" + {}", self.shift);
        }
        format!("{s}, omega = {}", self.omega)
    }

    pub fn ode_text(&self) -> String {
        match &self.ode {
            ReducedOde::Fifth(nf) => nf.describe(),
            ReducedOde::FirstOrder { a } => format!("(omega + {a})*phi' + phi = 0"),
        }
    }
}

impl Serialize for Reduction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Reduction", 10)?;
        st.serialize_field("case", &self.case)?;
        st.serialize_field("subalgebra", &self.subalgebra)?;
        st.serialize_field("param", &self.param)?;
        st.serialize_field("omega", &self.omega.to_string())?;
        st.serialize_field("ansatz", &self.ansatz_text())?;
        st.serialize_field("ode", &self.ode)?;
        st.serialize_field("ode_text", &self.ode_text())?;
        st.serialize_field("closed_form", &self.closed_form().map(|e| e.to_string()))?;
        st.serialize_field("equation", &self.equation)?;
        st.serialize_field("transform", &self.transform)?;
        st.serialize_field("notes", &self.notes)?;
        st.end()
    }
}

/// Ansatz pieces before the equation and transform are attached.
struct Row {
    omega: Expr,
    scale: Expr,
    shift: Expr,
    ode: ReducedOde,
    factor: Expr,
}

fn power_row(n: f64, rho: f64, lambda: f64, delta: f64) -> Row {
    let t = Expr::t();
    let a = (rho - 2.0) / (3.0 * n);
    Row {
        omega: Expr::x() * Expr::powf(t.clone(), -(rho + 1.0) / 3.0),
        scale: Expr::powf(t.clone(), a),
        shift: Expr::zero(),
        ode: ReducedOde::Fifth(NormalForm { c1: -(rho + 1.0) / 3.0, c2: a, ..NormalForm::basic(n, lambda, delta) }),
        factor: Expr::powf(t, a - 1.0),
    }
}

fn log_row(n: f64, a: f64, lambda: f64, delta: f64) -> Row {
    let t = Expr::t();
    Row {
        omega: Expr::x() - a / n * Expr::ln(t.clone()),
        scale: Expr::powf(t.clone(), -1.0 / n),
        shift: Expr::zero(),
        ode: ReducedOde::Fifth(NormalForm { c0: -a / n, c2: -1.0 / n, ..NormalForm::basic(n, lambda, delta) }),
        factor: Expr::powf(t, -1.0 - 1.0 / n),
    }
}

fn exp_row(n: f64, lambda: f64, delta: f64) -> Row {
    let t = Expr::t();
    Row {
        omega: Expr::x() * Expr::exp(-t.clone() / 3.0),
        scale: Expr::exp(t.clone() / (3.0 * n)),
        shift: Expr::zero(),
        ode: ReducedOde::Fifth(NormalForm { c1: -1.0 / 3.0, c2: 1.0 / (3.0 * n), ..NormalForm::basic(n, lambda, delta) }),
        factor: Expr::exp(t / (3.0 * n)),
    }
}

fn wave_row(n: f64, a: f64, lambda: f64, delta: f64) -> Row {
    Row {
        omega: Expr::x() - a * Expr::t(),
        scale: Expr::one(),
        shift: Expr::zero(),
        ode: ReducedOde::Fifth(NormalForm { c0: -a, ..NormalForm::basic(n, lambda, delta) }),
        factor: Expr::one(),
    }
}

fn galilei_row(a: f64) -> Row {
    let t = Expr::t();
    Row {
        omega: t.clone(),
        scale: Expr::one(),
        shift: Expr::x() / (t.clone() + a),
        ode: ReducedOde::FirstOrder { a },
        factor: Expr::one() / (t + a),
    }
}

fn accelerated_row(a: f64, lambda: f64, delta: f64) -> Row {
    let t = Expr::t();
    Row {
        omega: Expr::x() - t.clone() * t.clone() / a,
        scale: Expr::one(),
        shift: 2.0 / a * t,
        ode: ReducedOde::Fifth(NormalForm { c4: 2.0 / a, ..NormalForm::basic(1.0, lambda, delta) }),
        factor: Expr::one(),
    }
}

fn arctan_row(nu: f64, lambda: f64, delta: f64) -> Row {
    let t = Expr::t();
    let q = t.clone() * t.clone() + 1.0;
    let e = Expr::exp(nu * Expr::arctan(t.clone()));
    Row {
        omega: Expr::x() / (e.clone() * Expr::sqrt(q.clone())),
        scale: e.clone() / Expr::sqrt(q.clone()),
        shift: Expr::x() * t / q.clone(),
        ode: ReducedOde::Fifth(NormalForm { c1: -nu, c2: nu, c3: 1.0, ..NormalForm::basic(1.0, lambda, delta) }),
        factor: e * Expr::powf(q, -1.5),
    }
}

/// Canonical data a reduction is built from.
#[derive(Debug, Clone, Copy)]
struct CaseData {
    case: Case,
    n: f64,
    rho: Option<f64>,
    nu: Option<f64>,
    lambda: f64,
    delta: f64,
}

/// The ρ = 2 to ρ = −1 link `t′ = 1/t`, `x′ = −x/t`, `u′ = tu − x`.
fn rho2_link(eq: &KawaharaEq) -> Result<PointTransform, ModelError> {
    EquivParams::Moebius { a: 0.0, b: 1.0, c: 1.0, d: 0.0, e0: 0.0, e1: 0.0, e2: -1.0 }.transform(eq)
}

fn row_for(d: CaseData, label: &str, param: Option<f64>) -> Result<(Row, Vec<String>), ReduceError> {
    let (n, l, s) = (d.n, d.lambda, d.delta);
    let rho = d.rho.unwrap_or(0.0);
    let need = |name| param.ok_or(ReduceError::MissingParam { label: label.into(), name });
    let mut notes = Vec::new();
    let row = match (d.case, label) {
        (Case::C1 | Case::C1p, "g1.1" | "g1'.1") => {
            if d.case == Case::C1p {
                notes.push("g1'.1 reduces as case 1 with n = 1".into());
            }
            power_row(n, rho, l, s)
        }
        (Case::C1 | Case::C1p, "g1.2" | "g1'.2") => {
            if d.case == Case::C1p {
                notes.push("g1'.2 reduces as case 1 (ρ = −1) with n = 1".into());
            }
            log_row(n, need("a")?, l, s)
        }
        (Case::C2 | Case::C2p, "g2" | "g2'") => {
            if d.case == Case::C2p {
                notes.push("g2' reduces as case 2 with n = 1".into());
            }
            exp_row(n, l, s)
        }
        (Case::C3, "g3") => wave_row(n, need("a")?, l, s),
        (Case::C3p, "g3'.1") => wave_row(1.0, 0.0, l, s),
        (Case::C3p, "g3'.2") => {
            let a = need("a")?;
            if a == 0.0 {
                return Err(ReduceError::ZeroA);
            }
            accelerated_row(a, l, s)
        }
        (Case::C0p, "g0'") => galilei_row(need("a")?),
        (Case::C1p, "g0'") => galilei_row(need("s0")?),
        (Case::C2p, "g0'") => galilei_row(0.0),
        (Case::C4p, "g4'") => arctan_row(d.nu.unwrap_or(0.0), l, s),
        (case, label) => return Err(ReduceError::Mismatch { case: case.label().into(), label: label.into() }),
    };
    Ok((row, notes))
}

fn check_member(d: CaseData, label: &str, param: Option<f64>) -> Result<(), ReduceError> {
    if label == "g0" {
        return Err(ReduceError::Kernel);
    }
    let subs = crate::classify::subalgebras_for(d.case, d.n, d.rho, d.nu);
    let sub = subs
        .iter()
        .find(|s| s.label == label)
        .ok_or_else(|| ReduceError::Mismatch { case: d.case.label().into(), label: label.into() })?;
    match (sub.param, param) {
        (ParamDomain::None, _) => Ok(()),
        (dom, None) => Err(ReduceError::MissingParam { label: label.into(), name: dom.var().unwrap_or("a") }),
        (dom, Some(v)) if !dom.admits(v) => Err(ReduceError::BadParam { label: label.into(), value: v }),
        _ => Ok(()),
    }
}

fn assemble(
    d: CaseData,
    label: &str,
    param: Option<f64>,
    canonical: &KawaharaEq,
    to_canonical: &PointTransform,
) -> Result<Reduction, ReduceError> {
    check_member(d, label, param)?;
    if d.case == Case::C1p && label == "g1'.3" {
        let link = rho2_link(canonical)?;
        let linked = link.apply(canonical)?;
        let inner = CaseData { rho: Some(-1.0), ..d };
        let mut red = assemble(inner, "g1'.2", param, &linked, &to_canonical.then(&link))?;
        red.case = Case::C1p;
        red.subalgebra = label.into();
        red.notes.insert(
            0,
            "case 1′ with ρ = 2 is reduced through t′ = 1/t, x′ = −x/t, u′ = tu − x, which maps g1'.3 to g1'.2 with the same a"
                .into(),
        );
        return Ok(red);
    }
    let (row, notes) = row_for(d, label, param)?;
    Ok(Reduction {
        case: d.case,
        subalgebra: label.into(),
        param,
        omega: row.omega,
        scale: row.scale,
        shift: row.shift,
        ode: row.ode,
        factor: row.factor,
        equation: canonical.clone(),
        transform: to_canonical.clone(),
        notes,
    })
}

/// Builds the reduction of the classified equation by the optimal-system
/// member `label`, with its parameter (`a` or `s0`) when it has one.
pub fn build_reduction(result: &ClassificationResult, label: &str, param: Option<f64>) -> Result<Reduction, ReduceError> {
    let p = &result.params;
    let d = CaseData {
        case: result.case,
        n: result.n,
        rho: p.rho,
        nu: p.nu,
        lambda: p.lambda.unwrap_or(1.0),
        delta: p.delta.unwrap_or(1.0),
    };
    if optimal_subalgebras(result).iter().all(|s| s.label != label) && label != "g0" {
        return Err(ReduceError::Mismatch { case: result.case.label().into(), label: label.into() });
    }
    assemble(d, label, param, &result.canonical_equation, &result.transform)
}

/// Reduction of an equation already in the canonical form of `case` with
/// the given constants, in its own variables.
pub fn canonical_reduction(
    case: Case,
    n: f64,
    rho: Option<f64>,
    nu: Option<f64>,
    lambda: f64,
    delta: f64,
    domain: &Domain,
    label: &str,
    param: Option<f64>,
) -> Result<Reduction, ReduceError> {
    let (b, s) = crate::classify::canonical_forms(case, rho, nu).unwrap_or((Expr::one(), Expr::one()));
    let eq = KawaharaEq::new(n, Expr::one(), lambda * b, delta * s, domain.clone())?;
    let d = CaseData { case, n, rho, nu, lambda, delta };
    assemble(d, label, param, &eq, &PointTransform::identity(domain))
}

/// Boundary value problem on t ≥ t₀, x ≥ 0 for the case-1 (or 1′) equation
/// `u_t + uⁿu_x + λt^ρu_xxx + δt^{(5ρ+2)/3}u_xxxxx = 0` with
/// `∂ⁱu/∂xⁱ(t, 0) = γᵢ t^{(ρ−2−n(ρ+1)i)/(3n)}`, i = 0..4.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct InvariantBvp {
    pub n: f64,
    pub rho: f64,
    pub lambda: f64,
    pub delta: f64,
    pub gamma: [f64; 5],
    pub t0: f64,
    /// Right end of the t interval used for reconstruction.
    pub t1: f64,
}

impl InvariantBvp {
    /// Exponent of t in the boundary condition for `∂ⁱu/∂xⁱ`.
    pub fn exponent(&self, i: usize) -> f64 {
        (self.rho - 2.0 - self.n * (self.rho + 1.0) * i as f64) / (3.0 * self.n)
    }

    pub fn equation(&self) -> Result<KawaharaEq, ReduceError> {
        let (b, s) = crate::classify::canonical_forms(Case::C1, Some(self.rho), None).expect("case 1 has forms");
        Ok(KawaharaEq::new(self.n, Expr::one(), self.lambda * b, self.delta * s, Domain::new("t", self.t0, self.t1).map_err(ModelError::from)?)?)
    }
}

/// The case-1 reduction of the boundary value problem and its initial data
/// `φ⁽ⁱ⁾(0) = γᵢ`.
pub fn bvp_to_ivp(bvp: &InvariantBvp) -> Result<(Reduction, [f64; 5]), ReduceError> {
    if bvp.gamma[0] == 0.0 {
        return Err(ReduceError::ZeroGamma0);
    }
    if !(bvp.t0 > 0.0) || !(bvp.t1 > bvp.t0) {
        return Err(ReduceError::Bvp(format!("need 0 < t0 < t1, got t0 = {}, t1 = {}", bvp.t0, bvp.t1)));
    }
    if bvp.lambda == 0.0 || bvp.delta == 0.0 {
        return Err(ReduceError::Bvp("λδ must be nonzero".into()));
    }
    let eq = bvp.equation()?;
    let case = if bvp.n == 1.0 { Case::C1p } else { Case::C1 };
    let label = if bvp.n == 1.0 { "g1'.1" } else { "g1.1" };
    let row = power_row(bvp.n, bvp.rho, bvp.lambda, bvp.delta);
    let red = Reduction {
        case,
        subalgebra: label.into(),
        param: None,
        omega: row.omega,
        scale: row.scale,
        shift: row.shift,
        ode: row.ode,
        factor: row.factor,
        transform: PointTransform::identity(&eq.domain),
        equation: eq,
        notes: vec!["boundary data invariant under the scaling subalgebra; x = 0 maps to ω = 0".into()],
    };
    Ok((red, bvp.gamma))
}

/// The boundary value problem of an ice-cover configuration with the
/// preset's λ, δ and `γ₀ = 1/120` at `t₀ = 1`.
pub fn ice_bvp() -> InvariantBvp {
    InvariantBvp {
        n: 1.0,
        rho: 0.5,
        lambda: crate::model::ICE_LAMBDA,
        delta: crate::model::ICE_DELTA,
        gamma: [1.0 / 120.0, 0.0, 0.0, 0.0, 0.0],
        t0: 1.0,
        t1: 240.0,
    }
}
