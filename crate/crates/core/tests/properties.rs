use proptest::prelude::*;

use kawahara_core::expr::{Domain, Expr, Func};
use kawahara_core::model::{apply_equiv, EquivParams, KawaharaEq};
use kawahara_core::ode::{integrate, OdeOptions};
use kawahara_core::solutions::{
    conservation_check, degenerate_solution, pde_residual, proportional_equation, tanh_solution_n2, Grid2,
};

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-3.0f64..3.0).prop_map(Expr::constant),
        (1i32..5).prop_map(|k| Expr::constant(k as f64)),
        Just(Expr::t()),
        Just(Expr::x()),
    ]
}

/// Expressions in t and x built from the grammar's operators and functions.
fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (2.5 + Expr::func(Func::Sin, b))),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::powf(a, k as f64)),
            inner.clone().prop_map(|a| -a),
            inner.clone().prop_map(|a| Expr::func(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::tanh(a)),
            inner.clone().prop_map(|a| Expr::exp(0.1 * a)),
            inner.clone().prop_map(|a| Expr::sqrt(1.0 + a.clone() * a)),
            inner.prop_map(|a| Expr::arctan(a)),
        ]
    })
}

fn eval(e: &Expr, t: f64, x: f64) -> Option<f64> {
    e.eval(&[("t", t), ("x", x)]).ok().filter(|v| v.is_finite() && v.abs() < 1e6)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_round_trip(e in expr(), t in 1.0f64..2.0, x in -1.0f64..1.0) {
        let text = e.to_string();
        let back = Expr::parse(&text).unwrap_or_else(|err| panic!("`{text}`: {err}"));
        prop_assert_eq!(back.to_string(), text.clone());
        if let Some(v) = eval(&e, t, x) {
            prop_assert!(close(v, eval(&back, t, x).unwrap(), 1e-13), "{}", text);
        }
    }

    #[test]
    fn derivatives_match_finite_differences(e in expr(), t in 1.1f64..1.9, x in -0.9f64..0.9) {
        let h = 1e-5;
        for (var, dt, dx) in [("t", h, 0.0), ("x", 0.0, h)] {
            let (Some(fp), Some(fm), Some(d)) = (eval(&e, t + dt, x + dx), eval(&e, t - dt, x - dx), eval(&e.diff(var), t, x))
            else { continue };
            let fd = (fp - fm) / (2.0 * h);
            prop_assert!(close(d, fd, 1e-5), "d/d{} of {}: {} vs {}", var, e, d, fd);
        }
    }

    #[test]
    fn degenerate_solutions_are_exact(c in -3.0f64..3.0, a in 0.0f64..5.0, b in 0.1f64..3.0, s in -3.0f64..3.0) {
        let eq = KawaharaEq::new(1.0, Expr::one(), Expr::constant(b) * Expr::t(), Expr::constant(s), Domain::t(1.0, 2.0)).unwrap();
        let sol = degenerate_solution(&eq, c, a).unwrap();
        let g = Grid2::default();
        prop_assert!(pde_residual(&eq, &sol.u, &g).normalized <= 1e-12);
        let cons = conservation_check(&eq, &sol.u, &g);
        prop_assert!(cons.momentum.normalized <= 1e-12 && cons.energy.normalized <= 1e-12);
    }

    #[test]
    fn tanh_residual_is_phase_invariant(k in 0.3f64..1.5, chi in -20.0f64..20.0) {
        let eq = proportional_equation(2.0, Expr::parse("1/t").unwrap(), -1.0, -0.1, Domain::t(1.0, 2.0)).unwrap();
        let g = Grid2::default();
        let r0 = pde_residual(&eq, &tanh_solution_n2(&eq, k, 0.0).unwrap().u, &g);
        let r1 = pde_residual(&eq, &tanh_solution_n2(&eq, k, chi).unwrap().u, &g);
        prop_assert!(r0.normalized <= 1e-8 && r1.normalized <= 1e-8, "{:?} {:?}", r0, r1);
    }

    #[test]
    fn equivalence_maps_solutions_to_solutions(
        d0 in -1.0f64..1.0, d1 in 0.5f64..2.0, d2 in -1.0f64..1.0, d3 in 0.5f64..2.0, c in -1.0f64..1.0,
    ) {
        let eq = KawaharaEq::new(1.0, Expr::one(), Expr::t(), Expr::parse("t^2").unwrap(), Domain::t(1.0, 2.0)).unwrap();
        let sol = degenerate_solution(&eq, c, 0.5).unwrap();
        let (img, tr) = apply_equiv(&eq, &EquivParams::GaugedScaling { d0, d1, d2, d3 }).unwrap();
        let pushed = tr.push_solution(&sol.u);
        let g = Grid2::over(&img.domain, (-5.0, 5.0), 21, 21);
        prop_assert!(pde_residual(&img, &pushed, &g).normalized <= 1e-7);
    }
}

fn linear(a: [[f64; 2]; 2]) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), String> {
    move |_, y, dy| {
        dy[0] = a[0][0] * y[0] + a[0][1] * y[1];
        dy[1] = a[1][0] * y[0] + a[1][1] * y[1];
        Ok(())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_backward_round_trip(m in prop::array::uniform4(-1.0f64..1.0), y0 in prop::array::uniform2(-2.0f64..2.0)) {
        let a = [[m[0], m[1]], [m[2], m[3]]];
        let rtol = 1e-9;
        let opts = OdeOptions::with_tol(rtol, 1e-12);
        let fwd = integrate(&mut linear(a), &y0, (0.0, 2.0), &opts).unwrap();
        let back = integrate(&mut linear(a), fwd.final_state(), (2.0, 0.0), &opts).unwrap();
        let scale = fwd.states.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
        for (got, want) in back.final_state().iter().zip(y0) {
            prop_assert!((got - want).abs() <= 10.0 * rtol * scale, "{} vs {}", got, want);
        }
    }

    #[test]
    fn dense_output_tracks_tight_solution(m in prop::array::uniform4(-1.0f64..1.0), w in 0.05f64..1.95) {
        let a = [[m[0], m[1]], [m[2], m[3]]];
        let rtol = 1e-7;
        let sol = integrate(&mut linear(a), &[1.0, 0.5], (0.0, 2.0), &OdeOptions::with_tol(rtol, 1e-10)).unwrap();
        let tight = integrate(&mut linear(a), &[1.0, 0.5], (0.0, w), &OdeOptions::with_tol(1e-12, 1e-14)).unwrap();
        let scale = sol.states.iter().flatten().fold(1.0f64, |s, v| s.max(v.abs()));
        for (got, want) in sol.eval(w).unwrap().iter().zip(tight.final_state()) {
            prop_assert!((got - want).abs() <= 10.0 * rtol * scale, "{} vs {}", got, want);
        }
    }

    #[test]
    fn integration_is_deterministic(m in prop::array::uniform4(-1.0f64..1.0)) {
        let a = [[m[0], m[1]], [m[2], m[3]]];
        let opts = OdeOptions::default();
        let s1 = integrate(&mut linear(a), &[1.0, 0.0], (0.0, 3.0), &opts).unwrap();
        let s2 = integrate(&mut linear(a), &[1.0, 0.0], (0.0, 3.0), &opts).unwrap();
        prop_assert_eq!(s1.stats, s2.stats);
        prop_assert_eq!(&s1.mesh, &s2.mesh);
        prop_assert_eq!(&s1.states, &s2.states);
    }
}
