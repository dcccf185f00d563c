//! Symbolic-numeric toolkit for the variable-coefficient generalized Kawahara
//! equations `u_t + α(t)uⁿu_x + β(t)u_xxx + σ(t)u_xxxxx = 0`.
//!
//! The pipeline runs expression → equation → classification → reduction →
//! ODE integration → reconstruction, with closed-form solution families and
//! exact residual checks alongside.

pub mod classify;
pub mod expr;
pub mod model;
pub mod ode;
pub mod reduce;
pub mod solutions;

pub use classify::{classify, optimal_subalgebras, Case, ClassificationResult, ClassifyOptions};
pub use expr::{Domain, Expr};
pub use model::{EquationSpec, Generator, KawaharaEq, PointTransform};
pub use ode::{OdeOptions, OdeSolution};
pub use reduce::{bvp_to_ivp, build_reduction, reconstruct, InvariantBvp, Reduction};
pub use solutions::{pde_residual, ClosedFormSolution, Grid2};
