use std::path::Path;
use std::str::FromStr;

use kawahara_core::classify::{classify, optimal_subalgebras, Case, ClassificationResult, ClassifyOptions};
use kawahara_core::expr::{Domain, Expr};
use kawahara_core::model::{map_to_constant, reducibility, KawaharaEq, Witness};
use kawahara_core::ode::{integrate_reduction, ode_residual, OdeOptions, OdeResidual, OdeSolution, OdeStats, OdeStatus};
use kawahara_core::reduce::{build_reduction, bvp_to_ivp, reconstruct, reconstruct_dx, GridSolution, InvariantBvp};
use kawahara_core::solutions::{
    conservation_check, degenerate_solution, kudryashov_family, mapped_kudryashov, pde_residual, tanh_solution_n2,
    ClosedFormSolution, Conservation, Grid2, Residual,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExactSpec, GridSpec, JobConfig};
use crate::{json, CliError};

/// What a command produced: the JSON report, extra files for `--out-dir`,
/// and a failure message when the run should exit with code 3 even though
/// a report was written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub files: Vec<(String, Vec<u8>)>,
    pub failure: Option<String>,
}

impl Outcome {
    fn report(report: Value) -> Self {
        Outcome { report, files: Vec::new(), failure: None }
    }

    /// Prints the report and writes the files; returns the exit code.
    pub fn emit(self, out_dir: Option<&Path>) -> Result<i32, CliError> {
        let text = json::to_string(&self.report).map_err(|e| CliError::math(format!("serializing report: {e}")))?;
        print!("{text}");
        if let Some(dir) = out_dir {
            let io = |e: std::io::Error| CliError::config(format!("writing to {}: {e}", dir.display()));
            std::fs::create_dir_all(dir).map_err(io)?;
            std::fs::write(dir.join("report.json"), text.as_bytes()).map_err(io)?;
            for (name, bytes) in &self.files {
                std::fs::write(dir.join(name), bytes).map_err(io)?;
            }
        }
        match self.failure {
            Some(msg) => {
                eprintln!("{msg}");
                Ok(3)
            }
            None => Ok(0),
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn classify_job(cfg: &JobConfig, eq: &KawaharaEq) -> Result<ClassificationResult, CliError> {
    let result = classify(eq, &ClassifyOptions::default()).map_err(|e| CliError::math(format!("classification: {e}")))?;
    if let Some(want) = &cfg.case {
        let want = Case::from_str(want).map_err(CliError::config)?;
        if want != result.case {
            return Err(CliError::math(format!("case {want} was demanded but the equation is in case {}", result.case)));
        }
    }
    Ok(result)
}

/// Rounds for display so that fitted values like 0.49999999999 read as 0.5.
fn short(v: f64) -> String {
    format!("{}", format!("{v:.10e}").parse::<f64>().unwrap_or(v))
}

/// One line naming the classification row.
pub fn summary(r: &ClassificationResult) -> String {
    let p = &r.params;
    match r.case {
        Case::C0 => "case 0 (kernel ⟨∂_x⟩)".into(),
        Case::C0p => "case 0′ (kernel ⟨∂_x, t∂_x + ∂_u⟩)".into(),
        Case::C1 | Case::C1p => format!("case {}, ρ = {}", r.case, short(p.rho.unwrap_or(f64::NAN))),
        Case::C4p => format!("case 4′, ν = {}", short(p.nu.unwrap_or(f64::NAN))),
        c => format!("case {c}"),
    }
}

pub fn cmd_classify(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let eq = cfg.equation()?;
    let result = classify_job(cfg, &eq)?;
    let subalgebras = optimal_subalgebras(&result);
    Ok(Outcome::report(json!({
        "summary": summary(&result),
        "classification": to_value(&result),
        "subalgebras": to_value(&subalgebras),
    })))
}

pub fn cmd_reduce(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let eq = cfg.equation()?;
    let result = classify_job(cfg, &eq)?;
    let labels: Vec<String> = optimal_subalgebras(&result).into_iter().map(|s| s.label).collect();
    let Some(label) = &cfg.subalgebra else {
        return Err(CliError::config(format!(
            "reduce needs a subalgebra; case {} has {}",
            result.case,
            if labels.is_empty() { "none beyond the kernel".into() } else { labels.join(", ") }
        )));
    };
    let red = build_reduction(&result, label, cfg.param).map_err(|e| CliError::math(format!("reduction: {e}")))?;
    let closed = red.closed_form().map(|u| u.to_string());
    Ok(Outcome::report(json!({
        "summary": summary(&result),
        "ansatz": red.ansatz_text(),
        "ode": red.ode_text(),
        "closed_form": closed,
        "reduction": to_value(&red),
    })))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryCheck {
    /// i in ∂ⁱu/∂xⁱ(t, 0) = γᵢ t^e
    pub order: usize,
    pub exponent: f64,
    pub gamma: f64,
    /// Largest relative error over the grid times (absolute where γᵢ = 0).
    pub max_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub summary: String,
    pub bvp: InvariantBvp,
    pub ansatz: String,
    pub ode: String,
    pub span: [f64; 2],
    pub reached: f64,
    pub completed: bool,
    pub status: OdeStatus,
    pub stats: OdeStats,
    pub rtol: f64,
    pub atol: f64,
    pub ode_residual: OdeResidual,
    pub boundary: Vec<BoundaryCheck>,
    pub boundary_max_err: f64,
    pub grid_points: usize,
    pub grid_flagged: usize,
    #[serde(skip)]
    pub solution: OdeSolution,
    #[serde(skip)]
    pub grid: GridSolution,
}

/// Integrates the reduced IVP of the case-1 boundary value problem posed
/// for the classified equation, then rebuilds u on the grid.
pub fn cmd_solve(cfg: &JobConfig) -> Result<SolveReport, CliError> {
    let eq = cfg.equation()?;
    let ivp = cfg.ivp.as_ref().ok_or_else(|| CliError::config("solve needs an `ivp` section"))?;
    if ivp.span[0] != 0.0 || ivp.span[1] == 0.0 || !ivp.span[1].is_finite() {
        return Err(CliError::config(format!("ivp span must run from 0 to a nonzero end, got {:?}", ivp.span)));
    }
    let result = classify_job(cfg, &eq)?;
    if !matches!(result.case, Case::C1 | Case::C1p) {
        return Err(CliError::math(format!(
            "the boundary value problem needs case 1 or 1′, the equation is in case {}",
            result.case
        )));
    }
    let p = &result.params;
    let bvp = InvariantBvp {
        n: result.n,
        rho: p.rho.expect("case 1 has ρ"),
        lambda: p.lambda.unwrap_or(1.0),
        delta: p.delta.unwrap_or(1.0),
        gamma: ivp.gamma,
        t0: eq.domain.lo,
        t1: eq.domain.hi,
    };
    let math = |e: kawahara_core::reduce::ReduceError| CliError::math(e.to_string());
    let (mut red, y0) = bvp_to_ivp(&bvp).map_err(math)?;
    red.equation = result.canonical_equation.clone();
    red.transform = result.transform.clone();

    let tol = &cfg.tolerances;
    let opts = OdeOptions::with_tol(tol.rtol, tol.atol);
    let sol = integrate_reduction(&red, &y0, (ivp.span[0], ivp.span[1]), &opts).map_err(math)?;
    let residual = ode_residual(&red, &sol, ivp.probes).map_err(math)?;

    let grid = GridSpec::resolve(cfg.grid.as_ref(), (eq.domain.lo, eq.domain.hi), (ivp.span[0], ivp.span[1]))?;
    let u = reconstruct(&red, &sol, &grid.t, &grid.x).map_err(math)?;

    let mut boundary = Vec::with_capacity(5);
    for i in 0..5 {
        let g = reconstruct_dx(&red, &sol, &grid.t, &[0.0], i).map_err(math)?;
        let e = bvp.exponent(i);
        let max_err = grid.t.iter().enumerate().fold(0.0f64, |m, (k, t)| {
            let want = bvp.gamma[i] * t.powf(e);
            let err = (g.at(k, 0) - want).abs();
            m.max(if want != 0.0 { err / want.abs() } else { err })
        });
        boundary.push(BoundaryCheck { order: i, exponent: e, gamma: bvp.gamma[i], max_err });
    }
    let boundary_max_err = boundary.iter().fold(0.0f64, |m, b| m.max(b.max_err));

    Ok(SolveReport {
        summary: summary(&result),
        ansatz: red.ansatz_text(),
        ode: red.ode_text(),
        bvp,
        span: ivp.span,
        reached: sol.reached(),
        completed: sol.completed(),
        status: sol.status.clone(),
        stats: sol.stats,
        rtol: tol.rtol,
        atol: tol.atol,
        ode_residual: residual,
        boundary,
        boundary_max_err,
        grid_points: u.u.len(),
        grid_flagged: u.flagged,
        solution: sol,
        grid: u,
    })
}

impl From<SolveReport> for Outcome {
    fn from(r: SolveReport) -> Self {
        let mut phi = Vec::new();
        r.solution.write_csv(&mut phi, &["phi", "phi1", "phi2", "phi3", "phi4"]).expect("writing to memory");
        let mut grid = Vec::new();
        r.grid.write_csv(&mut grid).expect("writing to memory");
        let failure = (!r.completed).then(|| {
            format!("integration stopped at ω = {:e} before the end of the span {:?}: {:?}", r.reached, r.span, r.status)
        });
        Outcome { report: to_value(&r), files: vec![("phi.csv".into(), phi), ("grid.csv".into(), grid)], failure }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub solution: ClosedFormSolution,
    pub residual: Residual,
    pub conservation: Conservation,
    pub tolerance: f64,
    #[serde(skip)]
    pub grid: Grid2,
    #[serde(skip)]
    pub values: Vec<f64>,
}

fn build_exact(cfg: &JobConfig, spec: &ExactSpec) -> Result<ClosedFormSolution, CliError> {
    let math = |e: kawahara_core::solutions::SolutionError| CliError::math(e.to_string());
    match *spec {
        ExactSpec::Degenerate { c, a } => degenerate_solution(&cfg.equation()?, c, a).map_err(math),
        ExactSpec::TanhN2 { k, chi } => tanh_solution_n2(&cfg.equation()?, k, chi).map_err(math),
        ExactSpec::Kudryashov { alpha, beta, sigma, branch, mu, chi } => {
            let dom = match (&cfg.equation, cfg.preset) {
                (None, None) => Domain::t(1.0, 2.0),
                _ => cfg.equation()?.domain,
            };
            kudryashov_family(alpha, beta, sigma, branch, mu, chi, &dom).map_err(math)
        }
        ExactSpec::MappedKudryashov { delta1, delta3, delta4, mu, chi, branch } => {
            mapped_kudryashov(&cfg.equation()?, delta1, delta3, delta4, mu, chi, branch).map_err(math)
        }
    }
}

fn grid_csv(grid: &Grid2, values: &[f64]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x", "u"]).expect("writing to memory");
    for ((t, x), u) in grid.points().zip(values) {
        w.write_record([format!("{t:.17e}"), format!("{x:.17e}"), format!("{u:.17e}")]).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

/// Builds a closed form, checks it and refuses to emit it unless the
/// normalized residual is within the verification tolerance.
pub fn cmd_exact(cfg: &JobConfig) -> Result<ExactReport, CliError> {
    let spec = cfg.exact.as_ref().ok_or_else(|| CliError::config("exact needs an `exact` section"))?;
    let sol = build_exact(cfg, spec)?;
    let dom = &sol.equation.domain;
    let grid = GridSpec::resolve(cfg.grid.as_ref(), (dom.lo, dom.hi), sol.x_range)?;
    let residual = pde_residual(&sol.equation, &sol.u, &grid);
    let tol = cfg.tolerances.verify;
    if residual.flagged == grid.len() {
        return Err(CliError::math(format!("{} is undefined on the whole grid", sol.label)));
    }
    if !(residual.normalized <= tol) {
        return Err(CliError::math(format!(
            "{} fails verification: normalized residual {:e} > {tol:e}",
            sol.label, residual.normalized
        )));
    }
    let conservation = conservation_check(&sol.equation, &sol.u, &grid);
    let values = grid.sample(&sol.u);
    Ok(ExactReport { solution: sol, residual, conservation, tolerance: tol, grid, values })
}

impl From<ExactReport> for Outcome {
    fn from(r: ExactReport) -> Self {
        let csv = grid_csv(&r.grid, &r.values);
        Outcome { report: to_value(&r), files: vec![("solution.csv".into(), csv)], failure: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub candidate: String,
    pub equation: KawaharaEq,
    pub grid: Grid2,
    pub pde: Residual,
    pub momentum: Residual,
    pub energy: Residual,
}

pub fn cmd_verify(cfg: &JobConfig) -> Result<VerifyReport, CliError> {
    let text = cfg.candidate.as_ref().ok_or_else(|| CliError::config("verify needs a `candidate`"))?;
    let u = Expr::parse(text).map_err(|e| CliError::config(format!("candidate: {e}")))?;
    if let Some(v) = u.free_vars().into_iter().find(|v| v != "t" && v != "x") {
        return Err(CliError::config(format!("candidate may only depend on t and x, found `{v}`")));
    }
    let eq = cfg.equation()?;
    let grid = GridSpec::resolve(cfg.grid.as_ref(), (eq.domain.lo, eq.domain.hi), (-5.0, 5.0))?;
    let pde = pde_residual(&eq, &u, &grid);
    let c = conservation_check(&eq, &u, &grid);
    Ok(VerifyReport { candidate: u.to_string(), equation: eq, grid, pde, momentum: c.momentum, energy: c.energy })
}

impl From<VerifyReport> for Outcome {
    fn from(r: VerifyReport) -> Self {
        Outcome::report(to_value(&r))
    }
}

fn witness_json(w: &Witness) -> Value {
    match *w {
        Witness::Ratios { beta_over_alpha, sigma_over_alpha } => {
            json!({"beta_over_alpha": beta_over_alpha, "sigma_over_alpha": sigma_over_alpha})
        }
        Witness::N1 { c1, c0, k } => json!({"c1": c1, "c0": c0, "k": k}),
    }
}

/// Reducibility report; for reducible equations also the constant target,
/// the transform, and a check that a known solution of the target pulls
/// back to a solution of the input.
pub fn cmd_map_to_constant(cfg: &JobConfig) -> Result<Outcome, CliError> {
    let eq = cfg.equation()?;
    let model = |e: kawahara_core::model::ModelError| CliError::math(e.to_string());
    let red = reducibility(&eq).map_err(model)?;
    if !red.reducible {
        let failed = red.failed.unwrap_or_default();
        return Ok(Outcome {
            report: json!({"reducible": false, "failed": failed}),
            files: Vec::new(),
            failure: Some(format!("not reducible to constant coefficients: {failed} fails")),
        });
    }
    let m = map_to_constant(&eq).map_err(model)?;
    let target = &m.constant_eq;
    let sample = if eq.n == 1.0 {
        // keeps t̃ + a ≥ 1 on the target domain
        degenerate_solution(target, 0.5, 1.0 - target.domain.lo).ok()
    } else if eq.n == 2.0 && m.sigma < 0.0 {
        tanh_solution_n2(target, 1.0, 0.0).ok()
    } else {
        None
    };
    let check = match sample {
        Some(s) => {
            let back = m.transform.inverse().map_err(model)?.push_solution(&s.u);
            let grid = GridSpec::resolve(cfg.grid.as_ref(), (eq.domain.lo, eq.domain.hi), (-5.0, 5.0))?;
            let r = pde_residual(&eq, &back, &grid);
            json!({"family": s.label, "pulled_back": back.to_string(), "residual": to_value(&r)})
        }
        None => Value::Null,
    };
    Ok(Outcome::report(json!({
        "reducible": true,
        "witness": witness_json(&m.witness),
        "constant_equation": to_value(target),
        "transform": to_value(&m.transform),
        "deltas": m.deltas,
        "check": check,
    })))
}
