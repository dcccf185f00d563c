use std::io::Write;

use serde::Serialize;

use crate::expr::Expr;
use crate::ode::OdeSolution;

use super::{ReduceError, ReducedOde, Reduction};

/// u (or one of its x-derivatives) on a tensor grid, t-major. Points whose
/// ω falls outside the integrated span hold NaN and are counted in
/// `flagged`.
#[derive(Debug, Clone, Serialize)]
pub struct GridSolution {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub flagged: usize,
    /// Order of the x-derivative held in `u`.
    pub order: usize,
}

impl GridSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u[i * self.x.len() + j]
    }

    /// CSV with columns `t, x, u`; flagged points are written as NaN.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "t,x,u")?;
        for (i, t) in self.t.iter().enumerate() {
            for (j, x) in self.x.iter().enumerate() {
                writeln!(w, "{t:.17e},{x:.17e},{:.17e}", self.at(i, j))?;
            }
        }
        w.flush()
    }
}

/// u(t, x) in the input variables from the integrated invariant solution.
pub fn reconstruct(red: &Reduction, sol: &OdeSolution, ts: &[f64], xs: &[f64]) -> Result<GridSolution, ReduceError> {
    reconstruct_dx(red, sol, ts, xs, 0)
}

/// `∂ᵏu/∂xᵏ` on the grid, k ≤ 4. Since ω, x̃ are affine in x and Q, U⁰ are
/// at most affine in x, `∂ᵏu/∂xᵏ = ((X¹)ᵏ(Pω_x̃ᵏφ⁽ᵏ⁾ + ∂ᵏQ) − ∂ᵏU⁰)/U¹`.
pub fn reconstruct_dx(
    red: &Reduction,
    sol: &OdeSolution,
    ts: &[f64],
    xs: &[f64],
    order: usize,
) -> Result<GridSolution, ReduceError> {
    if let ReducedOde::FirstOrder { .. } = red.ode {
        return Err(ReduceError::FirstOrder(red.subalgebra.clone()));
    }
    if order >= sol.dim() {
        return Err(ReduceError::Bvp(format!("derivative order {order} exceeds the integrated state")));
    }
    let tr = &red.transform;
    let t_map = tr.t_map.compile();
    let x1 = tr.x1.compile();
    let x0 = tr.x0.compile();
    let u1 = tr.u1.compile();
    let u0k = tr.u0.diff_n("x", order).compile();
    let omega = red.omega.compile();
    let omega_x = red.omega.diff("x").compile();
    let scale = red.scale.compile();
    let shift_k = red.shift.diff_n("x", order).compile();
    let ev = |tape: &crate::expr::Tape, t: f64, x: f64| -> Result<f64, ReduceError> {
        tape.eval(&[("t", t), ("x", x)])
            .map_err(|e| ReduceError::Bvp(format!("ansatz undefined at (t, x) = ({t}, {x}): {e}")))
    };
    let k = order as i32;
    let mut u = Vec::with_capacity(ts.len() * xs.len());
    let mut flagged = 0;
    for &t in ts {
        let tt = ev(&t_map, t, 0.0)?;
        let (a1, a0, b1) = (ev(&x1, t, 0.0)?, ev(&x0, t, 0.0)?, ev(&u1, t, 0.0)?);
        let p = ev(&scale, tt, 0.0)?;
        for &x in xs {
            let xx = a1 * x + a0;
            let w = ev(&omega, tt, xx)?;
            match sol.eval(w) {
                Some(y) => {
                    let wx = ev(&omega_x, tt, xx)?;
                    let d = p * wx.powi(k) * y[order] + ev(&shift_k, tt, xx)?;
                    u.push((a1.powi(k) * d - ev(&u0k, t, x)?) / b1);
                }
                None => {
                    flagged += 1;
                    u.push(f64::NAN);
                }
            }
        }
    }
    Ok(GridSolution { t: ts.to_vec(), x: xs.to_vec(), u, flagged, order })
}

/// φ from a solution as a numeric function node, so the ansatz can be
/// evaluated as an ordinary expression.
#[derive(Debug)]
pub(crate) struct DenseComponent {
    pub sol: std::sync::Arc<OdeSolution>,
    pub index: usize,
}

impl crate::expr::NumericFn for DenseComponent {
    fn name(&self) -> &str {
        "phi"
    }

    fn eval(&self, s: f64) -> Result<f64, String> {
        let dim = self.sol.dim();
        let v = if self.index < dim {
            self.sol.eval(s).map(|y| y[self.index])
        } else if self.index == dim {
            // one order past the state: derivative of the interpolant
            self.sol.eval_derivative(s).map(|y| y[dim - 1])
        } else {
            return Err(format!("derivative of order {} not available", self.index));
        };
        v.ok_or_else(|| format!("ω = {s} outside the integrated span"))
    }

    fn derivative(&self, _applied: &Expr, arg: &Expr) -> Expr {
        Expr::apply(std::sync::Arc::new(DenseComponent { sol: self.sol.clone(), index: self.index + 1 }), arg.clone())
    }
}

/// `φ(omega)` backed by dense output.
pub fn dense_phi(sol: &std::sync::Arc<OdeSolution>) -> Expr {
    Expr::apply(std::sync::Arc::new(DenseComponent { sol: sol.clone(), index: 0 }), Expr::omega())
}
