//! Optimal systems of one-dimensional subalgebras of the canonical algebras.

use serde::Serialize;

use crate::expr::Expr;
use crate::model::Generator;

use super::{Case, ClassificationResult};

/// Values the free parameter of a subalgebra may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParamDomain {
    None,
    /// `a ∈ ℝ`
    Real,
    /// `a ≠ 0`
    NonzeroReal,
    /// `s0 ∈ {−1, 0, 1}`; named s0 to keep it apart from the coefficient σ.
    Sign,
}

impl ParamDomain {
    /// Name of the parameter variable in the generator, if any.
    pub fn var(self) -> Option<&'static str> {
        match self {
            ParamDomain::None => None,
            ParamDomain::Real | ParamDomain::NonzeroReal => Some("a"),
            ParamDomain::Sign => Some("s0"),
        }
    }

    pub fn admits(self, v: f64) -> bool {
        match self {
            ParamDomain::None => false,
            ParamDomain::Real => v.is_finite(),
            ParamDomain::NonzeroReal => v.is_finite() && v != 0.0,
            ParamDomain::Sign => [-1.0, 0.0, 1.0].contains(&v),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Subalgebra {
    /// ASCII label such as `g1.1` or `g3'.2`.
    pub label: String,
    /// Generator in canonical variables; contains the parameter as a free
    /// variable when `param` is not `None`.
    pub generator: Generator,
    pub param: ParamDomain,
}

impl Subalgebra {
    fn new(label: &str, tau: Expr, xi: Expr, eta: Expr, param: ParamDomain) -> Self {
        Subalgebra { label: label.into(), generator: Generator::new(tau, xi, eta), param }
    }

    /// The generator with its parameter set to `value`.
    pub fn instantiate(&self, value: Option<f64>) -> Generator {
        match (self.param.var(), value) {
            (Some(name), Some(v)) => self.generator.bind(&[(name, v)]),
            _ => self.generator.clone(),
        }
    }
}

/// Lists the optimal system for the case of `result`, instantiated with its
/// fitted n, ρ and ν.
pub fn optimal_subalgebras(result: &ClassificationResult) -> Vec<Subalgebra> {
    subalgebras_for(result.case, result.n, result.params.rho, result.params.nu)
}

pub(crate) fn subalgebras_for(case: Case, n: f64, rho: Option<f64>, nu: Option<f64>) -> Vec<Subalgebra> {
    use ParamDomain as P;
    let (t, x, u) = (Expr::t(), Expr::x(), Expr::u());
    let (a, s0) = (Expr::var("a"), Expr::var("s0"));
    let z = Expr::zero;
    let one = Expr::one;
    let mut out = vec![Subalgebra::new("g0", z(), one(), z(), P::None)];
    let rho = rho.unwrap_or(0.0);
    match case {
        Case::C0 => {}
        Case::C1 if rho == -1.0 => {
            out.push(Subalgebra::new("g1.2", n * t.clone(), a, -u, P::Real));
        }
        Case::C1 => out.push(Subalgebra::new(
            "g1.1",
            3.0 * n * t.clone(),
            (rho + 1.0) * n * x,
            (rho - 2.0) * u,
            P::None,
        )),
        Case::C2 => out.push(Subalgebra::new("g2", Expr::constant(3.0 * n), n * x, u, P::None)),
        Case::C3 => out.push(Subalgebra::new("g3", one(), a, z(), P::Real)),
        Case::C0p => out.push(Subalgebra::new("g0'", z(), t + a, one(), P::Real)),
        Case::C1p => {
            out.push(Subalgebra::new("g0'", z(), t.clone() + s0, one(), P::Sign));
            if rho == -1.0 {
                out.push(Subalgebra::new("g1'.2", t, a, -u, P::Real));
            } else if rho == 2.0 {
                out.push(Subalgebra::new("g1'.3", t.clone(), x + a.clone() * t, a, P::Real));
            } else {
                out.push(Subalgebra::new("g1'.1", 3.0 * t, (rho + 1.0) * x, (rho - 2.0) * u, P::None));
            }
        }
        Case::C2p => {
            out.push(Subalgebra::new("g0'", z(), t, one(), P::None));
            out.push(Subalgebra::new("g2'", Expr::constant(3.0), x, u, P::None));
        }
        Case::C3p => {
            out.push(Subalgebra::new("g3'.1", one(), z(), z(), P::None));
            out.push(Subalgebra::new("g3'.2", a, 2.0 * t, Expr::constant(2.0), P::Real));
        }
        Case::C4p => {
            let nu = nu.unwrap_or(0.0);
            out.push(Subalgebra::new(
                "g4'",
                t.clone() * t.clone() + 1.0,
                (t.clone() + nu) * x.clone(),
                x + (nu - t) * u,
                P::None,
            ));
        }
    }
    out
}
