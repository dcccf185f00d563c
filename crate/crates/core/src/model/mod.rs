//! Equations of the class, point transformations between them, the α = 1
//! gauge, reducibility to constant coefficients, and the ice-cover preset.

mod equiv;
mod ice;
mod time;
mod transform;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Domain, DomainError, Expr, ParseError, ZERO_TEST_POINTS};

pub use equiv::{
    apply_equiv, gauge_alpha1, integral_of_alpha, map_to_constant, n1_constant_map, reducibility,
    EquivParams, MapToConstant, Reducibility, Witness,
};
pub use ice::{ice_coefficients, ice_preset, IceCoefficients, IcePhysical, ICE_DELTA, ICE_LAMBDA};
pub use time::{invert_time_map, NumericInverse, TimeMap};
pub(crate) use time::snap_rational;
pub use transform::{Generator, PointTransform};

/// Smallest magnitude a coefficient may take at a sample point.
pub const NONVANISHING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("n must be a nonzero finite number (n = 0 gives a linear equation)")]
    ZeroN,
    #[error("coefficient {coef} vanishes near t = {t}")]
    Vanishing { coef: &'static str, t: f64 },
    #[error("coefficient {coef} cannot be evaluated at t = {t}: {reason}")]
    Undefined { coef: &'static str, t: f64, reason: String },
    #[error("coefficient {coef} depends on `{var}`; only t is allowed")]
    ForeignVariable { coef: &'static str, var: String },
    #[error("cannot parse {field}: {source}")]
    Parse { field: String, source: ParseError },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("domain must be an interval of t")]
    DomainVariable,
    #[error("alpha changes sign on the domain")]
    AlphaSignChange,
    #[error("this transformation requires n = {expected}, got n = {got}")]
    WrongN { expected: f64, got: f64 },
    #[error("this transformation requires alpha ≡ 1")]
    AlphaNotOne,
    #[error("degenerate transformation parameters: {0}")]
    Degenerate(String),
    #[error("equation is not reducible to constant coefficients: {criterion} fails")]
    NotReducible { criterion: String },
    #[error("time map is not invertible on the domain: {0}")]
    NotInvertible(String),
    #[error("identity test failed: {0}")]
    ZeroTest(String),
}

/// `u_t + α(t)uⁿu_x + β(t)u_xxx + σ(t)u_xxxxx = 0` on an interval of t.
#[derive(Debug, Clone)]
pub struct KawaharaEq {
    pub n: f64,
    pub alpha: Expr,
    pub beta: Expr,
    pub sigma: Expr,
    pub domain: Domain,
}

impl KawaharaEq {
    /// Validates that n ≠ 0 and that α, β, σ depend on t only and do not
    /// vanish at the sample points of the domain.
    pub fn new(n: f64, alpha: Expr, beta: Expr, sigma: Expr, domain: Domain) -> Result<Self, ModelError> {
        if n == 0.0 || !n.is_finite() {
            return Err(ModelError::ZeroN);
        }
        if domain.var != "t" {
            return Err(ModelError::DomainVariable);
        }
        let eq = KawaharaEq { n, alpha, beta, sigma, domain };
        eq.check_coefficients()?;
        Ok(eq)
    }

    fn check_coefficients(&self) -> Result<(), ModelError> {
        let samples = self.domain.samples(ZERO_TEST_POINTS);
        for (coef, e) in self.coefficients() {
            if let Some(var) = e.free_vars().into_iter().find(|v| v != "t") {
                return Err(ModelError::ForeignVariable { coef, var });
            }
            let tape = e.compile();
            for &t in &samples {
                let v = tape
                    .eval(&[("t", t)])
                    .map_err(|err| ModelError::Undefined { coef, t, reason: err.to_string() })?;
                if v.abs() <= NONVANISHING_FLOOR {
                    return Err(ModelError::Vanishing { coef, t });
                }
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> [(&'static str, &Expr); 3] {
        [("alpha", &self.alpha), ("beta", &self.beta), ("sigma", &self.sigma)]
    }

    /// Coefficient values `(α, β, σ)` at time t.
    pub fn coefficients_at(&self, t: f64) -> Result<(f64, f64, f64), ModelError> {
        let at = |coef: &'static str, e: &Expr| {
            e.eval(&[("t", t)])
                .map_err(|err| ModelError::Undefined { coef, t, reason: err.to_string() })
        };
        Ok((at("alpha", &self.alpha)?, at("beta", &self.beta)?, at("sigma", &self.sigma)?))
    }

    /// True when α ≡ 1 on the domain.
    pub fn alpha_is_one(&self) -> bool {
        (self.alpha.clone() - 1.0).is_zero(&self.domain).unwrap_or(false)
    }

    /// The left-hand side of the equation applied to a candidate `u(t, x)`.
    pub fn residual_expr(&self, u: &Expr) -> Expr {
        let terms = self.residual_terms(u);
        Expr::sum(terms)
    }

    /// The four terms `u_t, αuⁿu_x, βu_xxx, σu_xxxxx` for a candidate.
    pub fn residual_terms(&self, u: &Expr) -> [Expr; 4] {
        let ux = u.diff("x");
        let uxxx = ux.diff_n("x", 2);
        let uxxxxx = uxxx.diff_n("x", 2);
        let un = if self.n == 1.0 { u.clone() } else { Expr::powf(u.clone(), self.n) };
        [
            u.diff("t"),
            self.alpha.clone() * un * ux,
            self.beta.clone() * uxxx,
            self.sigma.clone() * uxxxxx,
        ]
    }

    pub fn to_spec(&self) -> EquationSpec {
        EquationSpec {
            n: self.n,
            alpha: self.alpha.to_string(),
            beta: self.beta.to_string(),
            sigma: self.sigma.to_string(),
            domain: [self.domain.lo, self.domain.hi],
            params: BTreeMap::new(),
        }
    }
}

impl std::fmt::Display for KawaharaEq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "u_t + ({})u^{}u_x + ({})u_xxx + ({})u_xxxxx = 0 on t in [{}, {}]",
            self.alpha, self.n, self.beta, self.sigma, self.domain.lo, self.domain.hi
        )
    }
}

impl Serialize for KawaharaEq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

/// JSON form of an equation: coefficient strings plus optional parameter
/// values that the strings may reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub n: f64,
    pub alpha: String,
    pub beta: String,
    pub sigma: String,
    pub domain: [f64; 2],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl EquationSpec {
    pub fn parse_coefficient(&self, field: &str, text: &str) -> Result<Expr, ModelError> {
        let names: Vec<&str> = self.params.keys().map(String::as_str).collect();
        let e = Expr::parse_with(text, &names)
            .map_err(|source| ModelError::Parse { field: field.to_string(), source })?;
        let values: Vec<(&str, f64)> = self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        Ok(e.bind(&values))
    }

    pub fn build(&self) -> Result<KawaharaEq, ModelError> {
        let domain = Domain::new("t", self.domain[0], self.domain[1])?;
        KawaharaEq::new(
            self.n,
            self.parse_coefficient("alpha", &self.alpha)?,
            self.parse_coefficient("beta", &self.beta)?,
            self.parse_coefficient("sigma", &self.sigma)?,
            domain,
        )
    }
}
