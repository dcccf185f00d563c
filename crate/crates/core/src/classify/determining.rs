//! Checks a candidate generator against the determining equations of the
//! class, written for arbitrary α(t).

use serde::Serialize;

use crate::expr::{linspace, Env, Expr};
use crate::model::{Generator, KawaharaEq};

use super::ClassifyError;

/// Grid size per direction used by [`verify_generator`].
pub const VERIFY_GRID: usize = 16;

/// Smallest per-equation scale, relative to the largest over all equations.
pub const SCALE_FLOOR: f64 = 1e-4;

/// A determining equation as a sum of terms, kept apart so the residual can
/// be measured against the size of the terms.
struct Determining {
    name: String,
    terms: Vec<Expr>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorCheck {
    /// `max |Σ terms| / max Σ |terms|` over the grid, worst equation; the
    /// denominator is at least [`SCALE_FLOOR`] times the largest one.
    pub max_residual: f64,
    /// Largest absolute residual seen.
    pub max_abs: f64,
    /// Name of the equation attaining `max_residual`.
    pub worst: String,
}

impl GeneratorCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// Groups `(power of u, term)` pairs into one equation per distinct power.
fn split_by_power(prefix: &str, parts: Vec<(f64, Expr)>) -> Vec<Determining> {
    let mut out: Vec<(f64, Determining)> = Vec::new();
    for (k, term) in parts {
        match out.iter_mut().find(|(p, _)| (p - k).abs() < 1e-12) {
            Some((_, d)) => d.terms.push(term),
            None => out.push((k, Determining { name: format!("{prefix}[u^{k}]"), terms: vec![term] })),
        }
    }
    out.into_iter().map(|(_, d)| d).collect()
}

fn determining_equations(eq: &KawaharaEq, g: &Generator, eta1: &Expr, eta0: &Expr) -> Vec<Determining> {
    let (tau, xi) = (&g.tau, &g.xi);
    let (a, b, s, n) = (&eq.alpha, &eq.beta, &eq.sigma, eq.n);
    let dx = |e: &Expr, k: usize| e.diff_n("x", k);
    let tau_t = tau.diff("t");
    let xi_x = dx(xi, 1);
    let mut eqs = vec![
        Determining { name: "E1".into(), terms: vec![dx(eta1, 1), -2.0 * dx(xi, 2)] },
        Determining {
            name: "E2".into(),
            terms: vec![
                3.0 * dx(eta1, 1) * b.clone(),
                -3.0 * dx(xi, 2) * b.clone(),
                10.0 * dx(eta1, 3) * s.clone(),
                -5.0 * dx(xi, 4) * s.clone(),
            ],
        },
        Determining {
            name: "E3".into(),
            terms: vec![tau.clone() * s.diff("t"), -5.0 * xi_x.clone() * s.clone(), tau_t.clone() * s.clone()],
        },
        Determining {
            name: "E4".into(),
            terms: vec![
                tau.clone() * b.diff("t"),
                -3.0 * xi_x.clone() * b.clone(),
                tau_t.clone() * b.clone(),
                -10.0 * dx(xi, 3) * s.clone(),
                10.0 * dx(eta1, 2) * s.clone(),
            ],
        },
    ];
    eqs.extend(split_by_power(
        "E5",
        vec![
            (n + 1.0, a.clone() * dx(eta1, 1)),
            (n, a.clone() * dx(eta0, 1)),
            (1.0, eta1.diff("t")),
            (1.0, dx(eta1, 3) * b.clone()),
            (1.0, dx(eta1, 5) * s.clone()),
            (0.0, eta0.diff("t")),
            (0.0, dx(eta0, 3) * b.clone()),
            (0.0, dx(eta0, 5) * s.clone()),
        ],
    ));
    eqs.extend(split_by_power(
        "E6",
        vec![
            (n, a.clone() * tau_t),
            (n, -(a.clone() * xi_x)),
            (n, n * a.clone() * eta1.clone()),
            (n, tau.clone() * a.diff("t")),
            (n - 1.0, n * a.clone() * eta0.clone()),
            (0.0, 3.0 * dx(eta1, 2) * b.clone()),
            (0.0, -(dx(xi, 3) * b.clone())),
            (0.0, 5.0 * dx(eta1, 4) * s.clone()),
            (0.0, -(dx(xi, 5) * s.clone())),
            (0.0, -xi.diff("t")),
        ],
    ));
    eqs
}

fn grid(eq: &KawaharaEq, with_u: bool) -> Vec<Env> {
    let (lo, hi) = (eq.domain.lo, eq.domain.hi);
    let h = (hi - lo) / VERIFY_GRID as f64;
    let ts: Vec<f64> = (0..VERIFY_GRID).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let xs = linspace(-2.0, 2.0, VERIFY_GRID);
    let us: &[f64] = if with_u { &[-0.7, 0.4, 1.3] } else { &[0.0] };
    let mut out = Vec::new();
    for &t in &ts {
        for &x in &xs {
            for &u in us {
                out.push(Env::new().with("t", t).with("x", x).with("u", u));
            }
        }
    }
    out
}

/// Evaluates the determining equations for `g` on a 16×16 `(t, x)` grid.
/// Fails if `g` does not have the structure `τ(t)∂_t + ξ(t, x)∂_x +
/// (η¹(t, x)u + η⁰(t, x))∂_u`.
pub fn verify_generator(eq: &KawaharaEq, g: &Generator) -> Result<GeneratorCheck, ClassifyError> {
    for (label, e, vars) in [
        ("τ", &g.tau, &["x", "u"][..]),
        ("ξ", &g.xi, &["u"][..]),
        ("η", &g.eta, &[][..]),
    ] {
        if let Some(v) = e.free_vars().into_iter().find(|v| !["t", "x", "u"].contains(&v.as_str())) {
            return Err(ClassifyError::Structure(format!("{label} depends on unbound `{v}`")));
        }
        for v in vars {
            if e.depends_on(v) {
                let d = e.diff(v);
                if !d.is_zero_on(&grid(eq, true), 1e-12).map_err(|err| ClassifyError::Evaluation(err.to_string()))? {
                    return Err(ClassifyError::Structure(format!("{label} depends on {v}")));
                }
            }
        }
    }
    let eta1 = g.eta.diff("u");
    if !eta1.diff("u").is_zero_on(&grid(eq, true), 1e-12).map_err(|err| ClassifyError::Evaluation(err.to_string()))? {
        return Err(ClassifyError::Structure("η is not affine in u".into()));
    }
    let eta1 = eta1.subst_one("u", &Expr::zero());
    let eta0 = g.eta.subst_one("u", &Expr::zero());
    let tau = g.tau.subst(&[("x", Expr::zero()), ("u", Expr::zero())]);
    let xi = g.xi.subst_one("u", &Expr::zero());
    let g = Generator::new(tau, xi, g.eta.clone());

    let pts = grid(eq, false);
    let mut rows = Vec::new();
    for d in determining_equations(eq, &g, &eta1, &eta0) {
        let tapes: Vec<_> = d.terms.iter().map(Expr::compile).collect();
        let (mut res, mut scale) = (0.0f64, 0.0f64);
        for p in &pts {
            let (mut sum, mut mag) = (0.0, 0.0);
            for tp in &tapes {
                let v = tp.eval(p).map_err(|e| ClassifyError::Evaluation(format!("{}: {e}", d.name)))?;
                sum += v;
                mag += v.abs();
            }
            res = res.max(sum.abs());
            scale = scale.max(mag);
        }
        rows.push((d.name, res, scale));
    }
    // An equation that vanishes identically can still evaluate to pure
    // rounding noise (η = X/X gives η_t ~ 1e-17); its own scale is then that
    // noise, so each scale is floored at a fraction of the largest one.
    let floor = SCALE_FLOOR * rows.iter().fold(0.0f64, |m, r| m.max(r.2));
    let mut check = GeneratorCheck { max_residual: 0.0, max_abs: 0.0, worst: String::new() };
    for (name, res, scale) in rows {
        check.max_abs = check.max_abs.max(res);
        let scale = scale.max(floor);
        let rel = if scale == 0.0 { 0.0 } else { res / scale };
        if check.worst.is_empty() || rel > check.max_residual {
            check.max_residual = rel;
            check.worst = name;
        }
    }
    Ok(check)
}
