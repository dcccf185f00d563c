//! Dormand–Prince 5(4) integration with PI step-size control, dense output,
//! a fixed-step mode for convergence studies, and CSV dumps.

mod residual;
mod tableau;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

pub use residual::{integrate_reduction, ode_residual, OdeResidual};
use tableau::{A, B, C, D, E};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("invalid tolerances: rtol = {rtol}, atol = {atol} (need rtol >= 1e-13, atol >= 0)")]
    Tolerance { rtol: f64, atol: f64 },
    #[error("empty integration span [{0}, {1}]")]
    EmptySpan(f64, f64),
    #[error("initial state has {got} components, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("right-hand side failed at the initial point: {0}")]
    InitialRhs(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-8, atol: 1e-10, h0: None, max_steps: 1_000_000 }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        OdeOptions { rtol, atol, ..Default::default() }
    }
}

/// How an integration ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OdeStatus {
    Completed,
    /// The step size fell below the resolution of ω, typically at a blow-up.
    StepSizeUnderflow { at: f64 },
    MaxSteps { at: f64 },
    /// The right-hand side failed or returned a non-finite value.
    RhsFailure { at: f64, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OdeStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Accepted mesh, states at the nodes and the per-step interpolation
/// coefficients of the pair's continuous extension.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub span: (f64, f64),
    pub mesh: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Five coefficient vectors per step.
    dense: Vec<[Vec<f64>; 5]>,
    pub stats: OdeStats,
    pub status: OdeStatus,
}

impl OdeSolution {
    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn completed(&self) -> bool {
        self.status == OdeStatus::Completed
    }

    /// Last ω reached.
    pub fn reached(&self) -> f64 {
        *self.mesh.last().expect("mesh is never empty")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("states are never empty")
    }

    fn forward(&self) -> bool {
        self.span.1 >= self.span.0
    }

    /// True when ω lies between the start and the reached point.
    pub fn covers(&self, w: f64) -> bool {
        let (a, b) = (self.mesh[0], self.reached());
        a.min(b) <= w && w <= a.max(b)
    }

    /// Step index containing ω, or an exact node hit.
    fn locate(&self, w: f64) -> Option<Result<usize, usize>> {
        if !self.covers(w) {
            return None;
        }
        let key = |m: &f64| if self.forward() { *m } else { -*m };
        let target = if self.forward() { w } else { -w };
        Some(match self.mesh.binary_search_by(|m| key(m).total_cmp(&target)) {
            Ok(i) => Ok(i),
            Err(i) => Err(i - 1),
        })
    }

    /// State at ω by the continuous extension; exact stored state at nodes.
    pub fn eval(&self, w: f64) -> Option<Vec<f64>> {
        match self.locate(w)? {
            Ok(i) => Some(self.states[i].clone()),
            Err(i) => {
                let h = self.mesh[i + 1] - self.mesh[i];
                let th = (w - self.mesh[i]) / h;
                let r = &self.dense[i];
                Some(
                    (0..self.dim())
                        .map(|j| {
                            r[0][j] + th * (r[1][j] + (1.0 - th) * (r[2][j] + th * (r[3][j] + (1.0 - th) * r[4][j])))
                        })
                        .collect(),
                )
            }
        }
    }

    /// ω-derivative of the continuous extension. At a node the right-hand
    /// step is used (the left one at the final node).
    pub fn eval_derivative(&self, w: f64) -> Option<Vec<f64>> {
        let i = match self.locate(w)? {
            Ok(i) => i.min(self.dense.len().checked_sub(1)?),
            Err(i) => i,
        };
        let h = self.mesh[i + 1] - self.mesh[i];
        let th = (w - self.mesh[i]) / h;
        let r = &self.dense[i];
        Some(
            (0..self.dim())
                .map(|j| {
                    let k = r[3][j] + (1.0 - th) * r[4][j];
                    let dk = -r[4][j];
                    let hh = r[2][j] + th * k;
                    let dh = k + th * dk;
                    let g = r[1][j] + (1.0 - th) * hh;
                    let dg = -hh + (1.0 - th) * dh;
                    (g + th * dg) / h
                })
                .collect(),
        )
    }

    /// Writes `ω, y0, y1, …` rows for the mesh nodes.
    pub fn write_csv<W: Write>(&self, out: W, names: &[&str]) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "omega,{}", names.join(","))?;
        for (m, y) in self.mesh.iter().zip(&self.states) {
            let cols: Vec<String> = y.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{m:.17e},{}", cols.join(","))?;
        }
        w.flush()
    }
}

/// A right-hand side `y' = f(ω, y)`, writing into `dy`.
pub trait Rhs {
    fn eval(&mut self, w: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String>;
}

impl<F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), String>> Rhs for F {
    fn eval(&mut self, w: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String> {
        self(w, y, dy)
    }
}

struct Counted<'a, R: Rhs + ?Sized> {
    f: &'a mut R,
    evals: usize,
}

impl<R: Rhs + ?Sized> Counted<'_, R> {
    fn call(&mut self, w: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String> {
        self.evals += 1;
        self.f.eval(w, y, dy)?;
        if dy.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(format!("non-finite derivative at ω = {w}"))
        }
    }
}

/// One Dormand–Prince step from (w, y) with `k[0] = f(w, y)` given. Fills
/// `k[1..7]`, the new state and the embedded error estimate.
fn dp_step<R: Rhs + ?Sized>(
    f: &mut Counted<R>,
    w: f64,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>; 7],
    y_new: &mut [f64],
    err: &mut [f64],
) -> Result<(), String> {
    let n = y.len();
    let mut tmp = vec![0.0; n];
    for s in 1..7 {
        for j in 0..n {
            let mut acc = 0.0;
            for (l, a) in A[s].iter().enumerate().take(s) {
                acc += a * k[l][j];
            }
            tmp[j] = y[j] + h * acc;
        }
        let (head, tail) = k.split_at_mut(s);
        let _ = head;
        f.call(w + C[s] * h, &tmp, &mut tail[0])?;
        if s == 5 {
            // Stage 7 is evaluated at the 5th-order solution (FSAL).
            for j in 0..n {
                let mut acc = 0.0;
                for (l, b) in B.iter().enumerate().take(6) {
                    acc += b * k[l][j];
                }
                y_new[j] = y[j] + h * acc;
            }
        }
    }
    for j in 0..n {
        let mut acc = 0.0;
        for (l, e) in E.iter().enumerate() {
            acc += e * k[l][j];
        }
        err[j] = h * acc;
    }
    Ok(())
}

fn dense_coeffs(y: &[f64], y_new: &[f64], k: &[Vec<f64>; 7], h: f64) -> [Vec<f64>; 5] {
    let n = y.len();
    let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    for j in 0..n {
        let dy = y_new[j] - y[j];
        let bspl = h * k[0][j] - dy;
        r[0][j] = y[j];
        r[1][j] = dy;
        r[2][j] = bspl;
        r[3][j] = dy - h * k[6][j] - bspl;
        let mut acc = 0.0;
        for (l, d) in D.iter().enumerate() {
            acc += d * k[l][j];
        }
        r[4][j] = h * acc;
    }
    r
}

fn check_inputs(y0: &[f64], span: (f64, f64), opts: &OdeOptions) -> Result<(), OdeError> {
    if !(opts.rtol >= 1e-13) || !(opts.atol >= 0.0) {
        return Err(OdeError::Tolerance { rtol: opts.rtol, atol: opts.atol });
    }
    if span.0 == span.1 || !span.0.is_finite() || !span.1.is_finite() {
        return Err(OdeError::EmptySpan(span.0, span.1));
    }
    if y0.is_empty() {
        return Err(OdeError::Dimension { expected: 1, got: 0 });
    }
    Ok(())
}

fn norm(err: &[f64], y: &[f64], y_new: &[f64], opts: &OdeOptions) -> f64 {
    let s: f64 = err
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let sc = opts.atol + opts.rtol * y[j].abs().max(y_new[j].abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / err.len() as f64).sqrt()
}

/// Initial step guess following the usual two-derivative heuristic.
fn initial_step<R: Rhs + ?Sized>(f: &mut Counted<R>, w: f64, y: &[f64], f0: &[f64], dir: f64, hmax: f64, opts: &OdeOptions) -> f64 {
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let (d0, d1) = (rms(y), rms(f0));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(hmax);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + dir * h * b).collect();
    let mut f1 = vec![0.0; y.len()];
    if f.call(w + dir * h, &y1, &mut f1).is_err() {
        return h * 1e-3;
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h;
    let h1 = if d1.max(d2) <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h).min(h1).min(hmax)
}

/// Adaptive integration of `y' = f(ω, y)` over `span` (either direction).
/// Integration stops early, with the reached point recorded in the status,
/// on step-size underflow, step limit or a failing right-hand side.
pub fn integrate<R: Rhs + ?Sized>(f: &mut R, y0: &[f64], span: (f64, f64), opts: &OdeOptions) -> Result<OdeSolution, OdeError> {
    check_inputs(y0, span, opts)?;
    let n = y0.len();
    let mut f = Counted { f, evals: 0 };
    let dir = (span.1 - span.0).signum();
    let length = (span.1 - span.0).abs();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    f.call(span.0, y0, &mut k[0]).map_err(OdeError::InitialRhs)?;

    let mut sol = OdeSolution {
        span,
        mesh: vec![span.0],
        states: vec![y0.to_vec()],
        dense: Vec::new(),
        stats: OdeStats::default(),
        status: OdeStatus::Completed,
    };
    let mut w = span.0;
    let mut y = y0.to_vec();
    let mut h = match opts.h0 {
        Some(h) => h.abs().min(length),
        None => initial_step(&mut f, w, &y, &k[0].clone(), dir, length, opts),
    };
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    // PI controller constants.
    let (safe, fac_min, fac_max, beta) = (0.9, 0.2, 10.0, 0.04);
    let expo = 0.2 - 0.75 * beta;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        let remaining = (span.1 - w) * dir;
        if remaining <= 0.0 {
            break;
        }
        if sol.stats.steps >= opts.max_steps {
            sol.status = OdeStatus::MaxSteps { at: w };
            break;
        }
        if h >= remaining || (remaining - h) <= 1e-12 * length {
            h = remaining;
        }
        if h <= 16.0 * f64::EPSILON * w.abs().max(length) {
            sol.status = OdeStatus::StepSizeUnderflow { at: w };
            break;
        }
        let step = dp_step(&mut f, w, &y, dir * h, &mut k, &mut y_new, &mut err);
        let e = match step {
            Ok(()) => norm(&err, &y, &y_new, opts),
            Err(_) => f64::INFINITY,
        };
        if e <= 1.0 {
            let w_new = if h == remaining { span.1 } else { w + dir * h };
            sol.dense.push(dense_coeffs(&y, &y_new, &k, dir * h));
            y.copy_from_slice(&y_new);
            w = w_new;
            k[0] = k[6].clone();
            sol.mesh.push(w);
            sol.states.push(y.clone());
            sol.stats.steps += 1;
            let mut fac = e.max(1e-10).powf(expo) / err_old.powf(beta) / safe;
            fac = fac.clamp(1.0 / fac_max, 1.0 / fac_min);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            err_old = e.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            sol.stats.rejected += 1;
            if step.is_err() && h <= 16.0 * f64::EPSILON * w.abs().max(length) * 1e3 {
                sol.status = OdeStatus::RhsFailure { at: w, reason: step.unwrap_err() };
                break;
            }
            let fac = if e.is_finite() { (e.powf(expo) / safe).min(1.0 / fac_min) } else { 10.0 };
            h /= fac;
            last_rejected = true;
        }
    }
    sol.stats.rhs_evals = f.evals;
    Ok(sol)
}

/// Fixed-step integration with the same tableau; returns the final state.
pub fn integrate_fixed<R: Rhs + ?Sized>(f: &mut R, y0: &[f64], span: (f64, f64), steps: usize) -> Result<Vec<f64>, String> {
    let n = y0.len();
    let mut f = Counted { f, evals: 0 };
    let h = (span.1 - span.0) / steps as f64;
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    f.call(span.0, &y, &mut k[0])?;
    for i in 0..steps {
        let w = span.0 + i as f64 * h;
        dp_step(&mut f, w, &y, h, &mut k, &mut y_new, &mut err)?;
        y.copy_from_slice(&y_new);
        k[0] = k[6].clone();
    }
    Ok(y)
}

/// Observed order of accuracy from step halving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ObservedOrder {
    /// The errors are at rounding level for all step sizes.
    Exact,
    Order(f64),
}

/// Estimates the convergence order of the fixed-step scheme with `base`,
/// `2·base` and `4·base` steps: against `exact` when given, otherwise by
/// Richardson differences of successive refinements.
pub fn convergence_order<R: Rhs + ?Sized>(
    f: &mut R,
    y0: &[f64],
    span: (f64, f64),
    exact: Option<&[f64]>,
    base: usize,
) -> Result<ObservedOrder, String> {
    let sols: Vec<Vec<f64>> = [base, 2 * base, 4 * base]
        .iter()
        .map(|&s| integrate_fixed(f, y0, span, s))
        .collect::<Result<_, _>>()?;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = sols[2].iter().map(|v| v.abs()).fold(1.0, f64::max);
    let (e1, e2) = match exact {
        Some(ex) => (dist(&sols[0], ex), dist(&sols[1], ex)),
        None => (dist(&sols[0], &sols[1]), dist(&sols[1], &sols[2])),
    };
    let floor = 1e3 * f64::EPSILON * scale;
    if e1 <= floor && e2 <= floor {
        return Ok(ObservedOrder::Exact);
    }
    Ok(ObservedOrder::Order((e1 / e2).log2()))
}
