//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use kawahara_cli::{cmd_classify, cmd_exact, cmd_solve, ExactSpec, IvpSpec, JobConfig, Preset};
use kawahara_core::classify::{canonical_basis, canonical_forms, classify, verify_generator, Case, ClassifyOptions};
use kawahara_core::expr::{Domain, Expr};
use kawahara_core::model::{
    apply_equiv, integral_of_alpha, map_to_constant, reducibility, EquationSpec, EquivParams, Generator, KawaharaEq,
};
use kawahara_core::ode::{convergence_order, integrate, ObservedOrder, OdeOptions};
use kawahara_core::reduce::{canonical_reduction, Reduction};
use kawahara_core::solutions::{degenerate_solution, kudryashov_family, pde_residual, Grid2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

fn spec(n: f64, a: &str, b: &str, s: &str) -> EquationSpec {
    EquationSpec { n, alpha: a.into(), beta: b.into(), sigma: s.into(), domain: [1.0, 2.0], params: Default::default() }
}

fn equation(n: f64, a: &str, b: &str, s: &str) -> KawaharaEq {
    spec(n, a, b, s).build().unwrap()
}

fn rel(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got / want - 1.0).abs()
    }
}

fn classification_round_trip() -> Check {
    // (case, n, ρ, ν, λ, δ)
    let rows: [(Case, f64, Option<f64>, Option<f64>, f64, f64); 9] = [
        (Case::C0, 2.0, None, None, 1.0, 1.0),
        (Case::C1, 2.0, Some(1.0), None, 1.0, 1.0),
        (Case::C2, 2.0, None, None, 2.0, -3.0),
        (Case::C3, 3.0, None, None, 2.0, 5.0),
        (Case::C0p, 1.0, None, None, 1.0, 1.0),
        (Case::C1p, 1.0, Some(0.75), None, 2.0, -1.0),
        (Case::C2p, 1.0, None, None, 1.0, 1.0),
        (Case::C3p, 1.0, None, None, 1.5, -1.0),
        (Case::C4p, 1.0, None, Some(1.0), 1.0, 1.0),
    ];
    let (mut worst_err, mut slowest) = (0.0f64, 0.0f64);
    for (case, n, rho, nu, lambda, delta) in rows {
        let (b, s) = match canonical_forms(case, rho, nu) {
            Some((b, s)) => ((lambda * b).to_string(), (delta * s).to_string()),
            None => ("t".into(), "exp(t)".into()),
        };
        let cfg = JobConfig { equation: Some(spec(n, "1", &b, &s)), ..Default::default() };
        let start = Instant::now();
        let out = cmd_classify(&cfg).map_err(|e| format!("case {case}: {e}"))?;
        let secs = start.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let r = &out.report["classification"];
        let got = r["case"].as_str().unwrap_or("?");
        if got != case.label() {
            return Err(format!("row {case} classified as {got}"));
        }
        if secs >= 1.0 {
            return Err(format!("row {case} took {secs:.2} s"));
        }
        let mut want = vec![("rho", rho), ("nu", nu)];
        if !matches!(case, Case::C0 | Case::C0p) {
            want.push(("lambda", Some(lambda)));
            want.push(("delta", Some(delta)));
        }
        for (name, value) in want {
            let Some(value) = value else { continue };
            let g = r["params"][name].as_f64().ok_or_else(|| format!("row {case}: no {name} reported"))?;
            let e = rel(g, value);
            worst_err = worst_err.max(e);
            if e > 1e-8 {
                return Err(format!("row {case}: {name} = {g}, want {value}"));
            }
        }
    }
    Ok(format!("9 rows, max param rel err {worst_err:.1e}, slowest {slowest:.3} s"))
}

fn random_time_map(rng: &mut StdRng) -> Expr {
    let t = Expr::t();
    match rng.random_range(0..4) {
        0 => rng.random_range(0.5..2.0) * t + rng.random_range(-1.0..1.0),
        1 => rng.random_range(0.5..2.0) * Expr::powf(t, rng.random_range(0.5..2.5)),
        2 => rng.random_range(0.5..2.0) * Expr::exp(rng.random_range(0.2..1.0) * t),
        _ => t.clone() + rng.random_range(0.05..0.3) * Expr::powf(t, 3.0),
    }
}

fn equivalence_invariance() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let eq = equation(1.0, "1", "1.5", "-1");
    let basis = canonical_basis(Case::C3p, 1.0, None, None);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = EquivParams::GeneralizedN1 {
            d0: rng.random_range(-1.0..1.0),
            d1: rng.random_range(-1.0..1.0),
            d2: sign * rng.random_range(0.5..2.0),
            d3: rng.random_range(-0.3..0.3),
            d4: rng.random_range(1.0..2.0),
            t_map: random_time_map(&mut rng),
        };
        let (img, tr) = apply_equiv(&eq, &p).map_err(|e| format!("trial {trial}: {e}"))?;
        let r = classify(&img, &ClassifyOptions::default()).map_err(|e| format!("trial {trial}: {e}"))?;
        if r.case != Case::C3p {
            return Err(format!("trial {trial}: classified as {} ({img})", r.case));
        }
        let mut gens: Vec<Generator> = r.canonical_generators.iter().map(|g| r.transform.pull_back(g)).collect();
        for g in &basis {
            gens.push(tr.push_forward(g).map_err(|e| format!("trial {trial}: {e}"))?);
        }
        for g in &gens {
            let c = verify_generator(&img, g).map_err(|e| format!("trial {trial}: {e}"))?;
            worst = worst.max(c.max_residual);
            if c.max_residual > 1e-9 {
                return Err(format!("trial {trial}: {g} has residual {:.2e} in {}", c.max_residual, c.worst));
            }
        }
    }
    Ok(format!("20/20 transforms stay in case 3′, max generator residual {worst:.1e}"))
}

fn random_coefficient(rng: &mut StdRng) -> Expr {
    let t = Expr::t();
    let c = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let f = match rng.random_range(0..5) {
        0 => Expr::exp(rng.random_range(-1.0..1.0) * t),
        1 => 1.0 + rng.random_range(0.1..1.0) * t.clone() * t.clone(),
        2 => 2.0 + Expr::func(kawahara_core::expr::Func::Sin, rng.random_range(0.5..3.0) * t),
        3 => Expr::powf(t, rng.random_range(-2.0..3.0)),
        _ => Expr::ln(1.0 + t.clone()) * Expr::sqrt(t),
    };
    c * f
}

fn kernel_generators() -> Check {
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    let dom = Domain::t(1.0, 2.0);
    let (mut worst, mut corrupted_min) = (0.0f64, f64::INFINITY);
    for trial in 0..20 {
        let n = [2.0, 3.0, -1.0, 0.5, 1.0][trial % 5];
        let alpha = if n == 1.0 && trial % 2 == 0 { Expr::one() } else { random_coefficient(&mut rng) };
        let eq = KawaharaEq::new(n, alpha, random_coefficient(&mut rng), random_coefficient(&mut rng), dom.clone())
            .map_err(|e| e.to_string())?;
        let mut good = vec![Generator::dx()];
        let mut bad = vec![Generator::new(Expr::one(), Expr::one(), Expr::zero())];
        if n == 1.0 {
            let s = integral_of_alpha(&eq);
            good.push(Generator::new(Expr::zero(), s.clone(), Expr::one()));
            bad.push(Generator::new(Expr::zero(), 1.1 * s, Expr::one()));
        }
        for g in &good {
            let r = verify_generator(&eq, g).map_err(|e| e.to_string())?.max_residual;
            worst = worst.max(r);
            if r > 1e-12 {
                return Err(format!("{g} on {eq}: residual {r:.2e}"));
            }
        }
        for g in &bad {
            let r = verify_generator(&eq, g).map_err(|e| e.to_string())?.max_residual;
            corrupted_min = corrupted_min.min(r);
            if r <= 1e-3 {
                return Err(format!("corrupted {g} on {eq} passes with residual {r:.2e}"));
            }
        }
    }
    Ok(format!("20 random equations, kernel residual ≤ {worst:.1e}, corrupted ≥ {corrupted_min:.1e}"))
}

fn reduction_rows() -> Vec<Reduction> {
    let d = Domain::t(1.0, 2.0);
    let row = |case, n, rho, label: &str, param| {
        canonical_reduction(case, n, rho, Some(0.3), 0.5, -2.0, &d, label, param).unwrap()
    };
    vec![
        row(Case::C1, 2.0, Some(0.5), "g1.1", None),
        row(Case::C1, 3.0, Some(1.25), "g1.1", None),
        row(Case::C1, 3.0, Some(-1.0), "g1.2", Some(0.7)),
        row(Case::C2, 2.0, None, "g2", None),
        row(Case::C3, 2.0, None, "g3", Some(0.7)),
        row(Case::C0p, 1.0, None, "g0'", Some(0.4)),
        row(Case::C1p, 1.0, Some(0.75), "g0'", Some(-1.0)),
        row(Case::C1p, 1.0, Some(0.75), "g1'.1", None),
        row(Case::C1p, 1.0, Some(-1.0), "g1'.2", Some(-0.6)),
        row(Case::C1p, 1.0, Some(2.0), "g1'.3", Some(0.7)),
        row(Case::C2p, 1.0, None, "g0'", None),
        row(Case::C2p, 1.0, None, "g2'", None),
        row(Case::C3p, 1.0, None, "g3'.1", None),
        row(Case::C3p, 1.0, None, "g3'.2", Some(1.5)),
        row(Case::C4p, 1.0, None, "g4'", None),
    ]
}

fn ansatz_correctness() -> Check {
    let phi = Expr::parse("1 + 0.3*omega - 0.2*omega^2 + 0.05*omega^3 + 0.1*omega^4 - 0.02*omega^5 + 0.01*omega^6")
        .unwrap();
    let rows = reduction_rows();
    for red in &rows {
        let dom = &red.equation.domain;
        let grid = Grid2::over(dom, (-2.0, 2.0), 16, 16);
        let pts: Vec<_> = grid
            .points()
            .map(|(t, x)| kawahara_core::expr::Env::new().with("t", t).with("x", x))
            .collect();
        let ok = red.ansatz_defect(&phi).is_zero_on(&pts, 1e-9).map_err(|e| e.to_string())?;
        if !ok {
            return Err(format!("row {} {}: PDE minus ODE is not zero", red.case, red.subalgebra));
        }
    }
    Ok(format!("{} rows, defect zero on 16×16 grids", rows.len()))
}

fn exact_oracles() -> Check {
    let start = Instant::now();
    let job = |e: EquationSpec, x: ExactSpec| JobConfig { equation: Some(e), exact: Some(x), ..Default::default() };
    let cases: Vec<(&str, JobConfig, f64)> = vec![
        ("degenerate α = 1", job(spec(1.0, "1", "1", "1"), ExactSpec::Degenerate { c: 0.0, a: 0.0 }), 1e-12),
        ("degenerate α = e^t", job(spec(1.0, "exp(t)", "1", "1"), ExactSpec::Degenerate { c: 1.0, a: 2.0 }), 1e-12),
        ("tanh Fig. 1", job(spec(2.0, "1/t", "-1/t", "-0.1/t"), ExactSpec::TanhN2 { k: 1.0, chi: 0.0 }), 1e-8),
        ("tanh Fig. 2", job(spec(2.0, "1/t^2", "-1/t^2", "-0.1/t^2"), ExactSpec::TanhN2 { k: 1.0, chi: -17.0 }), 1e-8),
        ("tanh Fig. 3", job(spec(2.0, "sqrt(t)", "-sqrt(t)", "-0.1*sqrt(t)"), ExactSpec::TanhN2 { k: 1.0, chi: 15.0 }), 1e-8),
        (
            "mapped Kudryashov",
            job(
                spec(1.0, "1", "-t", "t^3"),
                ExactSpec::MappedKudryashov { delta1: 0.0, delta3: 1.0, delta4: 0.0, mu: 0.3, chi: 0.1, branch: 1 },
            ),
            1e-7,
        ),
    ];
    let mut worst = (0.0f64, 0.0f64);
    for (name, cfg, tol) in cases {
        let r = cmd_exact(&cfg).map_err(|e| format!("{name}: {e}"))?;
        if r.residual.normalized > tol {
            return Err(format!("{name}: residual {:.2e} > {tol:.0e}", r.residual.normalized));
        }
        let cons = r.conservation.momentum.normalized.max(r.conservation.energy.normalized);
        if cons > 1e-7 {
            return Err(format!("{name}: conservation divergence {cons:.2e}"));
        }
        worst = (worst.0.max(r.residual.normalized), worst.1.max(cons));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 5.0 {
        return Err(format!("took {secs:.2} s"));
    }
    Ok(format!("6 solutions, max residual {:.1e}, max divergence {:.1e}, {secs:.2} s", worst.0, worst.1))
}

fn reducibility_criteria() -> Check {
    let want = [
        (equation(2.0, "exp(t)", "exp(t)", "exp(t)"), true),
        (equation(1.0, "1", "3*t+2", "(3*t+2)^3"), true),
        (equation(2.0, "1", "t", "1"), false),
    ];
    for (eq, reducible) in &want {
        let r = reducibility(eq).map_err(|e| e.to_string())?;
        if r.reducible != *reducible {
            return Err(format!("{eq}: reducible = {}, want {reducible}", r.reducible));
        }
    }
    let grid = Grid2::default();
    let mut worst = 0.0f64;
    // n ≠ 1: the transform carries the equation onto the constant one
    let m = map_to_constant(&want[0].0).map_err(|e| e.to_string())?;
    let image = m.transform.apply(&want[0].0).map_err(|e| e.to_string())?;
    for t in m.constant_eq.domain.samples(9) {
        let (a, b, s) = image.coefficients_at(t).map_err(|e| e.to_string())?;
        let e = rel(a, m.alpha).max(rel(b, m.beta)).max(rel(s, m.sigma));
        if e > 1e-9 {
            return Err(format!("image of the n = 2 example is not constant at t̃ = {t}"));
        }
    }
    // n = 1: degenerate and Kudryashov solutions of the target pulled back
    for (eq, family) in [
        (&want[1].0, "degenerate"),
        (&equation(1.0, "1", "3*t+2", "-(3*t+2)^3"), "kudryashov"),
    ] {
        let m = map_to_constant(eq).map_err(|e| e.to_string())?;
        let target = &m.constant_eq;
        let sol = if family == "degenerate" {
            degenerate_solution(target, 0.5, 1.0 - target.domain.lo)
        } else {
            kudryashov_family(m.alpha, m.beta, m.sigma, 1, 0.3, 0.1, &target.domain)
        }
        .map_err(|e| format!("{family}: {e}"))?;
        let target_res = pde_residual(target, &sol.u, &Grid2::over(&target.domain, (-5.0, 5.0), 21, 21));
        let back = m.transform.inverse().map_err(|e| e.to_string())?.push_solution(&sol.u);
        let r = pde_residual(eq, &back, &grid);
        worst = worst.max(r.normalized).max(target_res.normalized);
        if r.normalized > 1e-7 || r.flagged > 0 {
            return Err(format!("{family} pulled back to {eq}: residual {:.2e}", r.normalized));
        }
    }
    Ok(format!("3/3 reducibility verdicts, pulled-back residual ≤ {worst:.1e}"))
}

fn integrator() -> Check {
    let mut decay = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        dy[0] = -y[0];
        Ok(())
    };
    let mut modulated = |w: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        dy[0] = w.cos() * y[0];
        Ok(())
    };
    let mut orders = Vec::new();
    for (name, o) in [
        ("y' = -y", convergence_order(&mut decay, &[1.0], (0.0, 1.0), Some(&[(-1.0f64).exp()]), 8)),
        ("y' = cos(w) y", convergence_order(&mut modulated, &[1.0], (0.0, 2.0), Some(&[2f64.sin().exp()]), 16)),
    ] {
        match o {
            Ok(ObservedOrder::Order(p)) if (p - 5.0).abs() <= 0.3 => orders.push(p),
            other => return Err(format!("{name}: observed order {other:?}")),
        }
    }
    let mut growth = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        dy[0] = y[0];
        Ok(())
    };
    let e_sol = integrate(&mut growth, &[1.0], (0.0, 1.0), &OdeOptions::with_tol(1e-10, 1e-12)).map_err(|e| e.to_string())?;
    let e_err = (e_sol.final_state()[0] - std::f64::consts::E).abs();
    if e_err > 1e-8 {
        return Err(format!("y' = y gives e with error {e_err:.2e}"));
    }
    let rtol = 1e-8;
    let opts = OdeOptions::with_tol(rtol, 1e-12);
    let mut vdp = |_: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        dy[0] = y[1];
        dy[1] = -y[0] + 0.5 * (1.0 - y[0] * y[0]) * y[1];
        Ok(())
    };
    let y0 = [1.0, 0.5];
    let fwd = integrate(&mut vdp, &y0, (0.0, 5.0), &opts).map_err(|e| e.to_string())?;
    let back = integrate(&mut vdp, fwd.final_state(), (5.0, 0.0), &opts).map_err(|e| e.to_string())?;
    let trip = back.final_state().iter().zip(y0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !fwd.completed() || !back.completed() || trip > 10.0 * rtol {
        return Err(format!("round trip error {trip:.2e} > {:.0e}", 10.0 * rtol));
    }
    Ok(format!(
        "orders {:.3}, {:.3}; |y(1) - e| = {e_err:.1e}; round trip {trip:.1e}",
        orders[0], orders[1]
    ))
}

fn ice_pipeline() -> Check {
    let job = |rtol: f64| {
        let mut cfg = JobConfig {
            preset: Some(Preset::Ice),
            ivp: Some(IvpSpec { gamma: [1.0 / 120.0, 0.0, 0.0, 0.0, 0.0], span: [0.0, 5.0], probes: 400 }),
            ..Default::default()
        };
        cfg.tolerances.rtol = rtol;
        cmd_solve(&cfg).map_err(|e| e.to_string())
    };
    let main = job(1e-8)?;
    let loose = job(1e-6)?;
    let tight = job(1e-9)?;
    let ratio = loose.ode_residual.relative / tight.ode_residual.relative;
    let detail = format!(
        "{}; reached ω = {:.5} of {}; residual ratio rtol 1e-6/1e-9 = {ratio:.1}; boundary err {:.1e}",
        main.summary, main.reached, main.span[1], main.boundary_max_err
    );
    let mut failed = Vec::new();
    if !main.completed {
        failed.push(format!("integration stopped ({:?})", main.status));
    }
    if !(ratio >= 10.0) {
        failed.push("residual did not drop 10×".to_string());
    }
    if !(main.boundary_max_err <= 1e-9) {
        failed.push("boundary conditions violated".to_string());
    }
    if failed.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failed.join(", ")))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("classification round-trip", classification_round_trip),
        ("equivalence invariance", equivalence_invariance),
        ("generator verification", kernel_generators),
        ("ansatz correctness", ansatz_correctness),
        ("exact-solution oracles", exact_oracles),
        ("reducibility criteria", reducibility_criteria),
        ("ODE integrator", integrator),
        ("ice pipeline", ice_pipeline),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
