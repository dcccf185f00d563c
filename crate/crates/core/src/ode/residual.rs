use serde::Serialize;

use crate::reduce::{ReduceError, Reduction};

use super::{integrate, OdeError, OdeOptions, OdeSolution};

/// Sup-norm of the reduced ODE over probe points, absolute and relative to
/// the largest sum of term magnitudes seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeResidual {
    pub max_abs: f64,
    pub scale: f64,
    pub relative: f64,
    pub probes: usize,
}

/// Evaluates the normal-form left-hand side at `probes` points spread over
/// the reached span. φ…φ'''' come from dense output and φ⁽⁵⁾ from the
/// ω-derivative of the interpolant of φ''''; substituting the right-hand
/// side for φ⁽⁵⁾ would make the residual vanish identically.
pub fn ode_residual(red: &Reduction, sol: &OdeSolution, probes: usize) -> Result<OdeResidual, ReduceError> {
    let nf = red.normal_form().ok_or_else(|| ReduceError::FirstOrder(red.subalgebra.clone()))?;
    let (a, b) = (sol.mesh[0], sol.reached());
    let probes = probes.max(1);
    let (mut max_abs, mut scale) = (0.0f64, 0.0f64);
    for i in 0..probes {
        // interior points, off the mesh nodes in general
        let w = a + (b - a) * (i as f64 + 0.5) / probes as f64;
        let (Some(y), Some(dy)) = (sol.eval(w), sol.eval_derivative(w)) else { continue };
        let terms = nf.terms(w, &y, dy[4]).map_err(ReduceError::Bvp)?;
        max_abs = max_abs.max(terms.iter().sum::<f64>().abs());
        scale = scale.max(terms.iter().map(|v| v.abs()).sum());
    }
    let relative = if scale > 0.0 { max_abs / scale } else { max_abs };
    Ok(OdeResidual { max_abs, scale, relative, probes })
}

/// Integrates the reduced ODE of `red` from ω₀ with initial state `y0`.
pub fn integrate_reduction(
    red: &Reduction,
    y0: &[f64; 5],
    span: (f64, f64),
    opts: &OdeOptions,
) -> Result<OdeSolution, ReduceError> {
    let nf = *red.normal_form().ok_or_else(|| ReduceError::FirstOrder(red.subalgebra.clone()))?;
    let mut rhs = |w: f64, y: &[f64], dy: &mut [f64]| nf.rhs(w, y, dy);
    integrate(&mut rhs, y0, span, opts).map_err(|e: OdeError| ReduceError::Bvp(e.to_string()))
}
