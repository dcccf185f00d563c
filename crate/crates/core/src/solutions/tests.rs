use super::*;
use crate::expr::Env;
use crate::model::n1_constant_map;

fn eq1(a: &str, b: &str, s: &str) -> KawaharaEq {
    let p = |s: &str| Expr::parse(s).unwrap();
    KawaharaEq::new(1.0, p(a), p(b), p(s), Domain::t(1.0, 2.0)).unwrap()
}

fn same_on_grid(a: &Expr, b: &Expr, grid: &Grid2, eps: f64) -> bool {
    let pts: Vec<Env> = grid.points().map(|(t, x)| Env::new().with("t", t).with("x", x)).collect();
    (a.clone() - b.clone()).is_zero_on(&pts, eps).unwrap()
}

#[test]
fn degenerate_examples() {
    let g = Grid2::default();
    let sol = degenerate_solution(&eq1("1", "1", "1"), 0.0, 0.0).unwrap();
    assert!(same_on_grid(&sol.u, &(Expr::x() / Expr::t()), &g, 1e-14));
    assert!(pde_residual(&sol.equation, &sol.u, &g).normalized <= 1e-15);

    let sol = degenerate_solution(&eq1("exp(t)", "1", "1"), 1.0, 2.0).unwrap();
    assert!(same_on_grid(&sol.u, &Expr::parse("(x+1)/(exp(t)+2)").unwrap(), &g, 1e-14));
    assert!(pde_residual(&sol.equation, &sol.u, &g).normalized <= 1e-12);

    // independent of β, σ
    let sol = degenerate_solution(&eq1("cos(t)", "sin(t) + 2", "t^3 - 7"), 0.5, 1.0).unwrap();
    let r = pde_residual(&sol.equation, &sol.u, &g);
    assert!(r.normalized <= 1e-12, "{r:?}");
    let c = conservation_check(&sol.equation, &sol.u, &g);
    assert!(c.momentum.normalized <= 1e-12 && c.energy.normalized <= 1e-12, "{c:?}");
}

#[test]
fn degenerate_refusals() {
    assert!(matches!(degenerate_solution(&eq1("1", "1", "1"), 0.0, -1.5), Err(SolutionError::DenominatorRoot(_))));
    let eq2 = KawaharaEq::new(2.0, Expr::one(), Expr::one(), Expr::one(), Domain::t(1.0, 2.0)).unwrap();
    assert!(matches!(degenerate_solution(&eq2, 0.0, 0.0), Err(SolutionError::WrongN { .. })));
}

#[test]
fn residual_detects_non_solutions() {
    let g = Grid2::default();
    let sol = degenerate_solution(&eq1("1", "1", "1"), 0.0, 0.0).unwrap();
    let bad = sol.u.clone() + 0.01 * Expr::x() * Expr::x();
    assert!(pde_residual(&sol.equation, &bad, &g).normalized > 1e-3);
    let r = pde_residual(&sol.equation, &Expr::constant(3.0), &g);
    assert_eq!((r.max_abs, r.flagged), (0.0, 0));
    let c = conservation_check(&sol.equation, &Expr::constant(3.0), &g);
    assert_eq!((c.momentum.max_abs, c.energy.max_abs), (0.0, 0.0));
}

#[test]
fn undefined_points_are_flagged() {
    let g = Grid2::new(vec![1.0], vec![-1.0, 0.0, 1.0]);
    let eq = eq1("1", "1", "1");
    let r = pde_residual(&eq, &Expr::ln(Expr::x()), &g);
    assert_eq!(r.flagged, 2);
}

fn fig(alpha: &str, chi: f64) -> ClosedFormSolution {
    let eq = proportional_equation(2.0, Expr::parse(alpha).unwrap(), -1.0, -0.1, Domain::t(1.0, 2.0)).unwrap();
    tanh_solution_n2(&eq, 1.0, chi).unwrap()
}

#[test]
fn tanh_family() {
    let sol = fig("1/t", 0.0);
    let g = sol.grid();
    let expected = Expr::parse("-3 + 6*tanh(x - 3.4*ln(t))^2").unwrap();
    assert!(same_on_grid(&sol.u, &expected, &g, 1e-12));
    for s in [fig("1/t", 0.0), fig("1/t^2", -17.0), fig("sqrt(t)", 15.0)] {
        let r = pde_residual(&s.equation, &s.u, &g);
        assert!(r.normalized <= 1e-8, "{}: {r:?}", s.equation.alpha);
        let c = conservation_check(&s.equation, &s.u, &g);
        assert!(c.momentum.normalized <= 1e-7 && c.energy.normalized <= 1e-7, "{c:?}");
    }
    let eq = proportional_equation(2.0, Expr::one(), -1.0, -0.1, Domain::t(1.0, 2.0)).unwrap();
    let flat = tanh_solution_n2(&eq, 0.0, 0.3).unwrap();
    assert!(same_on_grid(&flat.u, &Expr::constant(1.0), &g, 1e-14));
    assert_eq!(pde_residual(&eq, &flat.u, &g).max_abs, 0.0);
}

#[test]
fn tanh_refusals() {
    let d = Domain::t(1.0, 2.0);
    let eq = proportional_equation(2.0, Expr::one(), -1.0, 0.1, d.clone()).unwrap();
    assert!(matches!(tanh_solution_n2(&eq, 1.0, 0.0), Err(SolutionError::SigmaSign(_))));
    let eq = KawaharaEq::new(2.0, Expr::one(), Expr::t(), Expr::one(), d).unwrap();
    assert!(matches!(tanh_solution_n2(&eq, 1.0, 0.0), Err(SolutionError::Form(_))));
}

#[test]
fn kudryashov_branches() {
    let d = Domain::t(1.0, 2.0);
    let sol = kudryashov_family(1.0, -1.0, 1.0, 1, 0.3, 0.2, &d).unwrap();
    assert!((sol.params["kappa"] - 13f64.sqrt() / 26.0).abs() < 1e-15);
    let g = sol.grid();
    let r = pde_residual(&sol.equation, &sol.u, &g);
    assert!(r.normalized <= 1e-8, "{r:?}");
    let c = conservation_check(&sol.equation, &sol.u, &g);
    assert!(c.momentum.normalized <= 1e-7 && c.energy.normalized <= 1e-7);
    let sol2 = kudryashov_family(2.0, 0.5, -3.0, 2, 0.0, 0.0, &d).unwrap();
    assert!(pde_residual(&sol2.equation, &sol2.u, &g).normalized <= 1e-8);
    // μ = 0: stationary profile
    assert!(sol2.u.diff("t").is_zero(&d).unwrap());
    for b in 3..=6 {
        assert!(matches!(kudryashov_family(1.0, -1.0, 1.0, b, 0.0, 0.0, &d), Err(SolutionError::ComplexBranch(_))));
    }
    assert!(matches!(kudryashov_family(1.0, 1.0, 1.0, 1, 0.0, 0.0, &d), Err(SolutionError::ProductSign { .. })));
}

#[test]
fn mapped_family() {
    let d = Domain::t(1.0, 2.0);
    let eq = form14_equation(Expr::one(), -1.0, 1.0, 1.0, 0.0, d.clone()).unwrap();
    let sol = mapped_kudryashov(&eq, 0.0, 1.0, 0.0, 0.3, 0.1, 1).unwrap();
    let g = Grid2::default();
    let r = pde_residual(&eq, &sol.u, &g);
    assert!(r.normalized <= 1e-7, "{r:?}");
    let c = conservation_check(&eq, &sol.u, &g);
    assert!(c.momentum.normalized <= 1e-7 && c.energy.normalized <= 1e-7, "{c:?}");

    // δ₃ = 0, δ₄ = 1 is the plain family with t̃ = ∫α dt
    let eq0 = form14_equation(Expr::one(), -1.0, 1.0, 0.0, 1.0, d.clone()).unwrap();
    let m = mapped_kudryashov(&eq0, 0.0, 0.0, 1.0, 0.3, 0.1, 1).unwrap();
    let k = kudryashov_family(1.0, -1.0, 1.0, 1, 0.3, 0.1, &d).unwrap();
    assert!(same_on_grid(&m.u, &k.u, &g, 1e-12));
}

#[test]
fn mapped_equals_pushed_family() {
    let d = Domain::t(1.0, 2.0);
    let (d1, d3, d4) = (0.4, 0.5, 1.5);
    let alpha = Expr::parse("2*t").unwrap();
    let eq = form14_equation(alpha, -1.0, 1.0, d3, d4, d.clone()).unwrap();
    let mapped = mapped_kudryashov(&eq, d1, d3, d4, 0.3, 0.1, 1).unwrap();
    let tr = n1_constant_map(&eq, d1, d3, d4).unwrap();
    let fam = kudryashov_family(1.0, -1.0, 1.0, 1, 0.3, 0.1, &tr.target_domain().unwrap()).unwrap();
    let pushed = tr.inverse().unwrap().push_solution(&fam.u);
    let g = Grid2::default();
    assert!(same_on_grid(&mapped.u, &pushed, &g, 1e-9));
    assert!(pde_residual(&eq, &mapped.u, &g).normalized <= 1e-7);
}

#[test]
fn mapped_refusals() {
    let eq = eq1("1", "t^2", "1");
    assert!(matches!(mapped_kudryashov(&eq, 0.0, 1.0, 0.0, 0.0, 0.0, 1), Err(SolutionError::Form(_))));
    let eq = eq1("exp(-t^2)", "1", "1");
    assert!(matches!(mapped_kudryashov(&eq, 0.0, 1.0, 0.0, 0.0, 0.0, 1), Err(SolutionError::QuadratureOnly(_))));
}
