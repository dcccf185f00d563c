//! Point transformations `t̃ = T(t)`, `x̃ = X¹(t)x + X⁰(t)`,
//! `ũ = U¹(t)u + U⁰(t, x)` and their action on equations, solutions and
//! vector fields.

use std::fmt;

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::expr::{Domain, Expr};

use super::time::{invert_time_map, TimeMap};
use super::{KawaharaEq, ModelError};

/// A Lie point symmetry generator `Q = τ∂_t + ξ∂_x + η∂_u`.
#[derive(Debug, Clone)]
pub struct Generator {
    pub tau: Expr,
    pub xi: Expr,
    pub eta: Expr,
}

impl Generator {
    pub fn new(tau: Expr, xi: Expr, eta: Expr) -> Self {
        Generator { tau, xi, eta }
    }

    /// `∂_x`
    pub fn dx() -> Self {
        Generator::new(Expr::zero(), Expr::one(), Expr::zero())
    }

    /// Substitutes numeric values for parameters in all components.
    pub fn bind(&self, values: &[(&str, f64)]) -> Generator {
        Generator::new(self.tau.bind(values), self.xi.bind(values), self.eta.bind(values))
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (c, d) in [(&self.tau, "∂_t"), (&self.xi, "∂_x"), (&self.eta, "∂_u")] {
            if c.is_const(0.0) {
                continue;
            }
            if c.is_const(1.0) {
                parts.push(d.to_string());
            } else {
                parts.push(format!("({c})*{d}"));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl Serialize for Generator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Generator", 4)?;
        st.serialize_field("tau", &self.tau.to_string())?;
        st.serialize_field("xi", &self.xi.to_string())?;
        st.serialize_field("eta", &self.eta.to_string())?;
        st.serialize_field("operator", &self.to_string())?;
        st.end()
    }
}

/// A transformation of the affine-in-(x, u) form admitted by the class.
#[derive(Debug, Clone)]
pub struct PointTransform {
    /// T(t)
    pub t_map: Expr,
    /// X¹(t)
    pub x1: Expr,
    /// X⁰(t)
    pub x0: Expr,
    /// U¹(t)
    pub u1: Expr,
    /// U⁰(t, x)
    pub u0: Expr,
    /// T⁻¹ as an expression in `t` standing for t̃.
    pub t_inverse: Expr,
    pub closed_inverse: bool,
    /// Interval of t on which the transform is used.
    pub domain: Domain,
}

impl PointTransform {
    pub fn identity(domain: &Domain) -> Self {
        PointTransform {
            t_map: Expr::t(),
            x1: Expr::one(),
            x0: Expr::zero(),
            u1: Expr::one(),
            u0: Expr::zero(),
            t_inverse: Expr::t(),
            closed_inverse: true,
            domain: domain.clone(),
        }
    }

    /// Builds a transform, inverting the time map and checking that
    /// `T_t·X¹·U¹` does not vanish on the domain.
    pub fn new(t_map: Expr, x1: Expr, x0: Expr, u1: Expr, u0: Expr, domain: &Domain) -> Result<Self, ModelError> {
        let TimeMap { forward, inverse, closed } = invert_time_map(&t_map, domain)?;
        Self::with_time_map(TimeMap { forward, inverse, closed }, x1, x0, u1, u0, domain)
    }

    pub fn with_time_map(
        time: TimeMap,
        x1: Expr,
        x0: Expr,
        u1: Expr,
        u0: Expr,
        domain: &Domain,
    ) -> Result<Self, ModelError> {
        if u1.depends_on("x") || u1.depends_on("u") || x1.depends_on("x") || x0.depends_on("x") {
            return Err(ModelError::Degenerate("X¹, X⁰, U¹ must depend on t only".into()));
        }
        let tr = PointTransform {
            t_map: time.forward,
            x1,
            x0,
            u1,
            u0,
            t_inverse: time.inverse,
            closed_inverse: time.closed,
            domain: domain.clone(),
        };
        let jac = tr.t_map.diff("t") * tr.x1.clone() * tr.u1.clone();
        let tape = jac.compile();
        for t in domain.samples(crate::expr::ZERO_TEST_POINTS) {
            let v = tape
                .eval(&[("t", t)])
                .map_err(|e| ModelError::Degenerate(format!("T_t·X¹·U¹ undefined at t = {t}: {e}")))?;
            if v.abs() <= super::NONVANISHING_FLOOR {
                return Err(ModelError::Degenerate(format!("T_t·X¹·U¹ vanishes near t = {t}")));
            }
        }
        Ok(tr)
    }

    /// Image of the domain under T.
    pub fn target_domain(&self) -> Result<Domain, ModelError> {
        let at = |t: f64| {
            self.t_map
                .eval(&[("t", t)])
                .map_err(|e| ModelError::NotInvertible(e.to_string()))
        };
        let (a, b) = (at(self.domain.lo)?, at(self.domain.hi)?);
        Ok(Domain::new("t", a.min(b), a.max(b))?)
    }

    /// Expresses a function of the source `t` through the target time.
    fn in_target_time(&self, e: &Expr) -> Expr {
        e.subst_one("t", &self.t_inverse)
    }

    /// Transformed equation: `α̃ = αX¹/((U¹)ⁿT_t)`, `β̃ = (X¹)³β/T_t`,
    /// `σ̃ = (X¹)⁵σ/T_t`, each re-expressed in t̃.
    pub fn apply(&self, eq: &KawaharaEq) -> Result<KawaharaEq, ModelError> {
        let tt = self.t_map.diff("t");
        let un = if eq.n == 1.0 { self.u1.clone() } else { Expr::powf(self.u1.clone(), eq.n) };
        let alpha = eq.alpha.clone() * self.x1.clone() / (un * tt.clone());
        let beta = Expr::powf(self.x1.clone(), 3.0) * eq.beta.clone() / tt.clone();
        let sigma = Expr::powf(self.x1.clone(), 5.0) * eq.sigma.clone() / tt;
        KawaharaEq::new(
            eq.n,
            self.in_target_time(&alpha),
            self.in_target_time(&beta),
            self.in_target_time(&sigma),
            self.target_domain()?,
        )
    }

    /// The inverse transformation, defined on the target domain.
    pub fn inverse(&self) -> Result<PointTransform, ModelError> {
        let x1 = self.in_target_time(&self.x1);
        let x0 = self.in_target_time(&self.x0);
        let u1 = self.in_target_time(&self.u1);
        // x as a function of (t̃, x̃)
        let x_src = (Expr::x() - x0.clone()) / x1.clone();
        let u0 = self.u0.subst(&[("t", self.t_inverse.clone()), ("x", x_src)]);
        Ok(PointTransform {
            t_map: self.t_inverse.clone(),
            x1: Expr::one() / x1.clone(),
            x0: Expr::neg(x0 / x1),
            u1: Expr::one() / u1.clone(),
            u0: Expr::neg(u0 / u1),
            t_inverse: self.t_map.clone(),
            closed_inverse: self.closed_inverse,
            domain: self.target_domain()?,
        })
    }

    /// `other ∘ self`: first apply `self`, then `other`.
    pub fn then(&self, other: &PointTransform) -> PointTransform {
        let at_t = |e: &Expr| e.subst_one("t", &self.t_map);
        let x_mid = self.x1.clone() * Expr::x() + self.x0.clone();
        let at_tx = |e: &Expr| e.subst(&[("t", self.t_map.clone()), ("x", x_mid.clone())]);
        let o_x1 = at_t(&other.x1);
        let o_u1 = at_t(&other.u1);
        PointTransform {
            t_map: at_t(&other.t_map),
            x1: o_x1.clone() * self.x1.clone(),
            x0: o_x1 * self.x0.clone() + at_t(&other.x0),
            u1: o_u1.clone() * self.u1.clone(),
            u0: o_u1 * self.u0.clone() + at_tx(&other.u0),
            t_inverse: self.t_inverse.subst_one("t", &other.t_inverse),
            closed_inverse: self.closed_inverse && other.closed_inverse,
            domain: self.domain.clone(),
        }
    }

    /// Maps a solution `u(t, x)` of the source equation to the solution
    /// `ũ(t̃, x̃)` of the transformed equation.
    pub fn push_solution(&self, u: &Expr) -> Expr {
        let image = self.u1.clone() * u.clone() + self.u0.clone();
        let x_src = (Expr::x() - self.in_target_time(&self.x0)) / self.in_target_time(&self.x1);
        image.subst(&[("t", self.t_inverse.clone()), ("x", x_src)])
    }

    /// Expresses a generator given in target variables `(t̃, x̃, ũ)` in the
    /// source variables `(t, x, u)`.
    pub fn pull_back(&self, g: &Generator) -> Generator {
        let x_new = self.x1.clone() * Expr::x() + self.x0.clone();
        let u_new = self.u1.clone() * Expr::u() + self.u0.clone();
        let map = [("t", self.t_map.clone()), ("x", x_new), ("u", u_new)];
        let (tau_t, xi_t, eta_t) = (g.tau.subst(&map), g.xi.subst(&map), g.eta.subst(&map));

        let tau = tau_t / self.t_map.diff("t");
        let x_dot = self.x1.diff("t") * Expr::x() + self.x0.diff("t");
        let xi = (xi_t - x_dot * tau.clone()) / self.x1.clone();
        let u_dot = self.u1.diff("t") * Expr::u() + self.u0.diff("t");
        let u_x = self.u0.diff("x");
        let eta = (eta_t - u_dot * tau.clone() - u_x * xi.clone()) / self.u1.clone();
        Generator::new(tau, xi, eta)
    }

    /// Expresses a generator in source variables in the target variables.
    pub fn push_forward(&self, g: &Generator) -> Result<Generator, ModelError> {
        Ok(self.inverse()?.pull_back(g))
    }
}

impl Serialize for PointTransform {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PointTransform", 7)?;
        st.serialize_field("t", &self.t_map.to_string())?;
        st.serialize_field("x1", &self.x1.to_string())?;
        st.serialize_field("x0", &self.x0.to_string())?;
        st.serialize_field("u1", &self.u1.to_string())?;
        st.serialize_field("u0", &self.u0.to_string())?;
        st.serialize_field("t_inverse", &self.t_inverse.to_string())?;
        st.serialize_field("closed_inverse", &self.closed_inverse)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq(n: f64, a: &str, b: &str, s: &str) -> KawaharaEq {
        KawaharaEq::new(
            n,
            Expr::parse(a).unwrap(),
            Expr::parse(b).unwrap(),
            Expr::parse(s).unwrap(),
            Domain::t(1.0, 2.0),
        )
        .unwrap()
    }

    #[test]
    fn inverse_round_trip_restores_coefficients() {
        let e = eq(2.0, "t", "t^2", "exp(t)");
        let tr = PointTransform::new(
            Expr::parse("t^2/2").unwrap(),
            Expr::constant(2.0),
            Expr::constant(1.0),
            Expr::constant(3.0),
            Expr::zero(),
            &e.domain,
        )
        .unwrap();
        let back = tr.inverse().unwrap().apply(&tr.apply(&e).unwrap()).unwrap();
        for (a, b) in [(&e.alpha, &back.alpha), (&e.beta, &back.beta), (&e.sigma, &back.sigma)] {
            assert!((a.clone() - b.clone()).is_zero(&e.domain).unwrap());
        }
    }

    #[test]
    fn push_then_pull_generator() {
        let d = Domain::t(1.0, 2.0);
        let tr = PointTransform::new(
            Expr::parse("-1/t").unwrap(),
            Expr::parse("1/t").unwrap(),
            Expr::zero(),
            Expr::t(),
            Expr::neg(Expr::x()),
            &d,
        )
        .unwrap();
        let g = Generator::new(Expr::t(), Expr::x() * 2.0, Expr::u() + 1.0);
        let there = tr.push_forward(&g).unwrap();
        let back = tr.pull_back(&there);
        let pts = [(1.2, 0.3, 0.7), (1.8, -2.0, 1.5)];
        for (c, d) in [(&g.tau, &back.tau), (&g.xi, &back.xi), (&g.eta, &back.eta)] {
            for &(t, x, u) in &pts {
                let b = [("t", t), ("x", x), ("u", u)];
                assert!((c.eval(&b).unwrap() - d.eval(&b).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_rejected() {
        let d = Domain::t(1.0, 2.0);
        let r = PointTransform::new(Expr::t(), Expr::zero(), Expr::zero(), Expr::one(), Expr::zero(), &d);
        assert!(matches!(r, Err(ModelError::Degenerate(_))));
    }
}
