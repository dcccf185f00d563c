//! Lie symmetry classification: case detection from the classifying system,
//! canonical parameters, generator bases, their verification against the
//! determining equations, and optimal one-dimensional subalgebras.

mod determining;
mod subalgebras;
mod system;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expr::Expr;
use crate::model::{apply_equiv, gauge_alpha1, Generator, KawaharaEq, ModelError, PointTransform};

pub use determining::{verify_generator, GeneratorCheck, VERIFY_GRID};
pub use subalgebras::{optimal_subalgebras, ParamDomain, Subalgebra};
pub(crate) use subalgebras::subalgebras_for;
pub use system::{canonical_forms, canonicalize, solve_classifying_system, Canonical, ClassifyingQuadruple};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("classifying system has a {dim}-dimensional solution space (over-determined fit)")]
    OverDetermined { dim: usize },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("generator does not have the admissible structure: {0}")]
    Structure(String),
    #[error("canonical form check failed: {0}")]
    Canonical(String),
    #[error("generator {generator} fails the determining equations (residual {residual:e} in {equation})")]
    GeneratorRejected { generator: String, residual: f64, equation: String },
    #[error("internal error: {0}")]
    Internal(String),
}

/// Case labels of the classification: 0–3 for n ≠ 1, 0′–4′ for n = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    C0,
    C1,
    C2,
    C3,
    C0p,
    C1p,
    C2p,
    C3p,
    C4p,
}

impl Case {
    pub const ALL: [Case; 9] =
        [Case::C0, Case::C1, Case::C2, Case::C3, Case::C0p, Case::C1p, Case::C2p, Case::C3p, Case::C4p];

    pub fn label(self) -> &'static str {
        match self {
            Case::C0 => "0",
            Case::C1 => "1",
            Case::C2 => "2",
            Case::C3 => "3",
            Case::C0p => "0′",
            Case::C1p => "1′",
            Case::C2p => "2′",
            Case::C3p => "3′",
            Case::C4p => "4′",
        }
    }

    pub fn is_n1(self) -> bool {
        matches!(self, Case::C0p | Case::C1p | Case::C2p | Case::C3p | Case::C4p)
    }

    /// Dimension of the maximal Lie invariance algebra.
    pub fn dimension(self) -> usize {
        match self {
            Case::C0 => 1,
            Case::C1 | Case::C2 | Case::C3 | Case::C0p => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Case {
    type Err = String;

    /// Accepts `1′`, `1'` and `1p`.
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().replace(['\'', 'p'], "′");
        Case::ALL.into_iter().find(|c| c.label() == norm).ok_or_else(|| format!("unknown case `{s}`"))
    }
}

impl Serialize for Case {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// Tolerances used by [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyOptions {
    /// Number of sample points stacked into the classifying system.
    pub samples: usize,
    /// Singular values below `svd_rel·σ_max` span the null space.
    pub svd_rel: f64,
    /// Relative sup-norm residual a candidate quadruple must reach.
    pub verify_rel: f64,
    /// Largest determining-equation residual accepted for a generator.
    pub generator_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { samples: 8, svd_rel: 1e-9, verify_rel: 1e-8, generator_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct CaseParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationResult {
    pub case: Case,
    pub n: f64,
    pub params: CaseParams,
    pub quadruple: Option<ClassifyingQuadruple>,
    /// Basis of the maximal Lie invariance algebra in the input variables.
    pub generators: Vec<Generator>,
    /// The same basis in the canonical variables.
    pub canonical_generators: Vec<Generator>,
    pub residuals: Vec<f64>,
    pub canonical_equation: KawaharaEq,
    /// Gauge to α = 1.
    pub gauge: PointTransform,
    /// From the input equation to `canonical_equation`.
    pub transform: PointTransform,
    pub notes: Vec<String>,
}

/// Basis of the maximal Lie invariance algebra of the canonical equation.
pub fn canonical_basis(case: Case, n: f64, rho: Option<f64>, nu: Option<f64>) -> Vec<Generator> {
    let (t, x, u) = (Expr::t(), Expr::x(), Expr::u());
    let z = Expr::zero;
    let galilei = || Generator::new(z(), t.clone(), Expr::one());
    let mut basis = vec![Generator::dx()];
    match case {
        Case::C0 => {}
        Case::C1 => {
            let rho = rho.unwrap_or(0.0);
            basis.push(Generator::new(3.0 * n * t.clone(), (rho + 1.0) * n * x.clone(), (rho - 2.0) * u.clone()));
        }
        Case::C2 => basis.push(Generator::new(Expr::constant(3.0 * n), n * x.clone(), u.clone())),
        Case::C3 => basis.push(Generator::new(Expr::one(), z(), z())),
        Case::C0p => basis.push(galilei()),
        Case::C1p => {
            let rho = rho.unwrap_or(0.0);
            basis.push(galilei());
            basis.push(Generator::new(3.0 * t.clone(), (rho + 1.0) * x.clone(), (rho - 2.0) * u.clone()));
        }
        Case::C2p => {
            basis.push(galilei());
            basis.push(Generator::new(Expr::constant(3.0), x.clone(), u.clone()));
        }
        Case::C3p => {
            basis.push(galilei());
            basis.push(Generator::new(Expr::one(), z(), z()));
        }
        Case::C4p => {
            let nu = nu.unwrap_or(0.0);
            basis.push(galilei());
            basis.push(Generator::new(
                t.clone() * t.clone() + 1.0,
                (t.clone() + nu) * x.clone(),
                (nu - t) * u + x,
            ));
        }
    }
    basis
}

fn fit_constant(ratio: &Expr, eq: &KawaharaEq, what: &str) -> Result<f64, ClassifyError> {
    let mid = 0.5 * (eq.domain.lo + eq.domain.hi);
    let v = ratio.eval(&[("t", mid)]).map_err(|e| ClassifyError::Evaluation(e.to_string()))?;
    let flat = ratio.clone() / v - 1.0;
    let ok = flat.is_zero(&eq.domain).map_err(|e| ClassifyError::Evaluation(e.to_string()))?;
    if !ok {
        return Err(ClassifyError::Canonical(format!("{what} is not constant on the canonical domain")));
    }
    Ok(v)
}

/// Classifies an equation: gauges α to 1, solves the classifying system,
/// maps to the canonical representative, fits λ and δ, and returns the
/// symmetry basis in the input variables, each generator verified against
/// the determining equations.
pub fn classify(eq: &KawaharaEq, opts: &ClassifyOptions) -> Result<ClassificationResult, ClassifyError> {
    let (gauged, gauge) = gauge_alpha1(eq)?;
    let quadruple = solve_classifying_system(&gauged, opts)?;
    let canon = canonicalize(quadruple, eq.n, &gauged.domain)?;
    let (canonical_equation, to_canon) = apply_equiv(&gauged, &canon.params)?;
    let transform = gauge.then(&to_canon);

    let mut params = CaseParams { rho: canon.rho, rho_raw: canon.rho_raw, nu: canon.nu, m: canon.m, ..Default::default() };
    if let Some((b, s)) = canonical_forms(canon.case, canon.rho, canon.nu) {
        params.lambda = Some(fit_constant(&(canonical_equation.beta.clone() / b), &canonical_equation, "β/β₀")?);
        params.delta = Some(fit_constant(&(canonical_equation.sigma.clone() / s), &canonical_equation, "σ/σ₀")?);
    }

    let canonical_generators = canonical_basis(canon.case, eq.n, canon.rho, canon.nu);
    let mut generators = Vec::new();
    let mut residuals = Vec::new();
    for g in &canonical_generators {
        let pulled = transform.pull_back(g);
        let check = verify_generator(eq, &pulled)?;
        if !check.passes(opts.generator_tol) {
            return Err(ClassifyError::GeneratorRejected {
                generator: pulled.to_string(),
                residual: check.max_residual,
                equation: check.worst,
            });
        }
        residuals.push(check.max_residual);
        generators.push(pulled);
    }

    let mut notes = Vec::new();
    if canon.case == Case::C1p && canon.rho == Some(2.0) {
        notes.push("case 1′ with ρ = 2 is equivalent to ρ = −1 via t′ = 1/t, x′ = −x/t, u′ = tu − x".into());
    }
    if canon.rho_raw != canon.rho {
        notes.push(format!(
            "ρ = {} normalized to {} by t ↦ 1/t",
            canon.rho_raw.unwrap_or(f64::NAN),
            canon.rho.unwrap_or(f64::NAN)
        ));
    }
    Ok(ClassificationResult {
        case: canon.case,
        n: eq.n,
        params,
        quadruple,
        generators,
        canonical_generators,
        residuals,
        canonical_equation,
        gauge,
        transform,
        notes,
    })
}
