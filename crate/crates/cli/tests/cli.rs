use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kawahara"));
    c.env_remove("KAWAHARA_SEED_TOL");
    c
}

fn job(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out: Output = bin().args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, String::from_utf8(out.stderr).unwrap())
}

fn eq_json(n: f64, a: &str, b: &str, s: &str) -> String {
    format!(r#"{{"n": {n}, "alpha": "{a}", "beta": "{b}", "sigma": "{s}", "domain": [1, 2]}}"#)
}

#[test]
fn classify_summaries() {
    let d = TempDir::new().unwrap();
    let ice = job(d.path(), "ice.json", r#"{"preset": "ice"}"#);
    let (code, r, _) = run(&["classify", ice.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["summary"], "case 1′, ρ = 0.5");

    let c3 = job(d.path(), "c3.json", &format!(r#"{{"equation": {}}}"#, eq_json(1.0, "1", "0.3", "0.7")));
    assert_eq!(run(&["classify", c3.to_str().unwrap()]).1["summary"], "case 3′");

    let c0 = job(d.path(), "c0.json", &format!(r#"{{"equation": {}}}"#, eq_json(2.0, "1", "t", "exp(t)")));
    let (code, r, _) = run(&["classify", c0.to_str().unwrap()]);
    assert_eq!((code, r["summary"].as_str().unwrap()), (0, "case 0 (kernel ⟨∂_x⟩)"));

    let (code, _, err) = run(&["classify", c0.to_str().unwrap(), "--case", "1"]);
    assert_eq!(code, 3);
    assert!(err.contains("case 1 was demanded"), "{err}");
}

#[test]
fn config_errors_exit_2() {
    let d = TempDir::new().unwrap();
    let missing = d.path().join("none.json");
    assert_eq!(run(&["classify", missing.to_str().unwrap()]).0, 2);
    let unknown = job(d.path(), "u.json", r#"{"preset": "ice", "bogus": 1}"#);
    assert_eq!(run(&["classify", unknown.to_str().unwrap()]).0, 2);
    let tol = job(d.path(), "t.json", r#"{"preset": "ice", "tolerances": {"rtol": -1}}"#);
    assert_eq!(run(&["classify", tol.to_str().unwrap()]).0, 2);
    let ice = job(d.path(), "ice.json", r#"{"preset": "ice"}"#);
    assert_eq!(run(&["classify", ice.to_str().unwrap(), "--case", "9"]).0, 2);
    assert_eq!(run(&["exact", ice.to_str().unwrap()]).0, 2);
    let out = bin().args(["classify", ice.to_str().unwrap()]).env("KAWAHARA_SEED_TOL", "abc").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["classify", ice.to_str().unwrap()]).env("KAWAHARA_SEED_TOL", "1e-8").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn reduce_lists_labels_and_reduces() {
    let d = TempDir::new().unwrap();
    let ice = job(d.path(), "ice.json", r#"{"preset": "ice"}"#);
    let (code, _, err) = run(&["reduce", ice.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("g1'.1"), "{err}");
    let (code, r, _) = run(&["reduce", ice.to_str().unwrap(), "--subalgebra", "g1'.1"]);
    assert_eq!(code, 0);
    let ode = &r["reduction"]["ode"];
    assert_eq!((ode["c1"].as_f64(), ode["c2"].as_f64()), (Some(-0.5), Some(-0.5)));
    let (code, r, _) = run(&["reduce", ice.to_str().unwrap(), "--subalgebra", "g0'", "--param", "-1"]);
    assert_eq!(code, 0);
    assert!(r["closed_form"].is_string());
    assert_eq!(run(&["reduce", ice.to_str().unwrap(), "--subalgebra", "g3'.1"]).0, 3);
}

#[test]
fn solve_equilibrium_gives_constant_columns() {
    // case 1 with ρ = 2 has c₂ = 0, so a constant φ solves the reduced ODE
    let d = TempDir::new().unwrap();
    let cfg = format!(
        r#"{{"equation": {}, "ivp": {{"gamma": [0.7, 0, 0, 0, 0], "span": [0, 2]}}}}"#,
        eq_json(2.0, "1", "t^2", "t^4")
    );
    let p = job(d.path(), "eq.json", &cfg);
    let out = d.path().join("out");
    let (code, r, err) = run(&["solve", p.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(r["completed"], true);
    assert_eq!(r["grid_flagged"].as_u64(), Some(0));
    let phi = std::fs::read_to_string(out.join("phi.csv")).unwrap();
    let mut rows = phi.lines();
    assert_eq!(rows.next(), Some("omega,phi,phi1,phi2,phi3,phi4"));
    for row in rows {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(&v[1..], &[0.7, 0.0, 0.0, 0.0, 0.0]);
    }
    let grid = std::fs::read_to_string(out.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 21 * 21);
    assert!(out.join("report.json").exists());
}

#[test]
fn solve_reports_blow_up() {
    let d = TempDir::new().unwrap();
    let cfg = r#"{"preset": "ice", "ivp": {"gamma": [0.008333333333333333, 0, 0, 0, 0], "span": [0, 5]}}"#;
    let p = job(d.path(), "ice.json", cfg);
    let out = d.path().join("out");
    let (code, r, err) = run(&["solve", p.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("integration stopped"), "{err}");
    let reached = r["reached"].as_f64().unwrap();
    assert!(reached > 0.25 && reached < 0.35, "{reached}");
    assert_eq!(r["status"]["status"], "step_size_underflow");
    assert!(r["boundary_max_err"].as_f64().unwrap() <= 1e-9);
    // the partial solution is still written
    assert!(out.join("phi.csv").exists() && out.join("grid.csv").exists());

    let (_, loose, _) = run(&["solve", p.to_str().unwrap(), "--rtol", "1e-6"]);
    let (_, tight, _) = run(&["solve", p.to_str().unwrap(), "--rtol", "1e-9"]);
    let res = |r: &Value| r["ode_residual"]["relative"].as_f64().unwrap();
    assert!(res(&loose) > res(&tight));
}

#[test]
fn exact_writes_verified_grids() {
    let d = TempDir::new().unwrap();
    let cfg = format!(
        r#"{{"equation": {}, "exact": {{"family": "tanh_n2", "k": 1, "chi": 0}}}}"#,
        eq_json(2.0, "1/t", "-1/t", "-0.1/t")
    );
    let p = job(d.path(), "fig1.json", &cfg);
    let out = d.path().join("out");
    let (code, r, _) = run(&["exact", p.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(r["residual"]["normalized"].as_f64().unwrap() <= 1e-8);
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 21 * 21);
    // (t, x) = (1, 0): u = −3 + 6·tanh²(0)
    let row = csv.lines().nth(11).unwrap();
    let u: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((u + 3.0).abs() < 1e-12, "{row}");

    let (code, _, _) = run(&["exact", p.to_str().unwrap(), "--grid", "1:2:3,0:1:2", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(out.join("solution.csv")).unwrap().lines().count(), 7);

    let bad = format!(r#"{{"equation": {}, "exact": {{"family": "degenerate", "c": 0, "a": -1.5}}}}"#, eq_json(1.0, "1", "1", "1"));
    let p = job(d.path(), "bad.json", &bad);
    let (code, _, err) = run(&["exact", p.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn verify_reports_three_residuals() {
    let d = TempDir::new().unwrap();
    let e = eq_json(1.0, "1", "1", "1");
    let exact = job(d.path(), "a.json", &format!(r#"{{"equation": {e}, "candidate": "(x + 1)/(t + 2)"}}"#));
    let (code, r, _) = run(&["verify", exact.to_str().unwrap()]);
    assert_eq!(code, 0);
    for k in ["pde", "momentum", "energy"] {
        assert!(r[k]["normalized"].as_f64().unwrap() <= 1e-14, "{k}");
    }
    let near = job(d.path(), "b.json", &format!(r#"{{"equation": {e}, "candidate": "(x + 1)/(t + 2) + 0.001*x^2"}}"#));
    let r = run(&["verify", near.to_str().unwrap()]).1;
    assert!(r["pde"]["max_abs"].as_f64().unwrap() > 1e-4);
    let sin = job(d.path(), "c.json", &format!(r#"{{"equation": {e}, "candidate": "sin(x)"}}"#));
    assert!(run(&["verify", sin.to_str().unwrap()]).1["pde"]["normalized"].as_f64().unwrap() > 0.1);
    let broken = job(d.path(), "d.json", &format!(r#"{{"equation": {e}, "candidate": "sin(x"}}"#));
    let (code, _, err) = run(&["verify", broken.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("byte 5"), "{err}");
}

#[test]
fn map_to_constant_verdicts() {
    let d = TempDir::new().unwrap();
    let yes = job(d.path(), "y.json", &format!(r#"{{"equation": {}}}"#, eq_json(1.0, "1", "3*t+2", "(3*t+2)^3")));
    let (code, r, _) = run(&["map-to-constant", yes.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(r["reducible"], true);
    assert!(r["check"]["residual"]["normalized"].as_f64().unwrap() <= 1e-7);
    let no = job(d.path(), "n.json", &format!(r#"{{"equation": {}}}"#, eq_json(2.0, "1", "t", "1")));
    let (code, r, _) = run(&["map-to-constant", no.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(r["reducible"], false);
    assert_eq!(r["failed"], "(β/α)_t = 0");
}

#[test]
fn reports_are_byte_identical() {
    let d = TempDir::new().unwrap();
    let p = job(d.path(), "ice.json", r#"{"preset": "ice", "ivp": {"gamma": [0.008333333333333333, 0, 0, 0, 0], "span": [0, 0.25]}}"#);
    let outs: Vec<Vec<u8>> = (0..2)
        .map(|_| bin().args(["solve", p.to_str().unwrap()]).output().unwrap().stdout)
        .collect();
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs[0].clone()).unwrap();
    // 17 significant digits
    assert!(text.contains("\"rtol\": 1.0000000000000000e-8"), "{text}");
}
