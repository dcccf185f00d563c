use std::path::{Path, PathBuf};

use kawahara_core::expr::{linspace, Domain};
use kawahara_core::model::{ice_preset, EquationSpec, KawaharaEq};
use kawahara_core::solutions::Grid2;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A job file. Which sections are needed depends on the command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub equation: Option<EquationSpec>,
    #[serde(default)]
    pub preset: Option<Preset>,
    /// Case the equation is required to fall into (e.g. `"1'"`).
    #[serde(default)]
    pub case: Option<String>,
    #[serde(default)]
    pub subalgebra: Option<String>,
    /// Value of the subalgebra parameter `a` or `s0`.
    #[serde(default)]
    pub param: Option<f64>,
    #[serde(default)]
    pub ivp: Option<IvpSpec>,
    #[serde(default)]
    pub exact: Option<ExactSpec>,
    /// Candidate u(t, x) for `verify`.
    #[serde(default)]
    pub candidate: Option<String>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// n = 1, α = 1, β = λ√t, σ = δt^{3/2} on t ∈ [1, 240].
    Ice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IvpSpec {
    /// φ(0), φ'(0), …, φ''''(0).
    pub gamma: [f64; 5],
    #[serde(default = "default_span")]
    pub span: [f64; 2],
    #[serde(default = "default_probes")]
    pub probes: usize,
}

fn default_span() -> [f64; 2] {
    [0.0, 5.0]
}

fn default_probes() -> usize {
    400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExactSpec {
    Degenerate { c: f64, a: f64 },
    TanhN2 { k: f64, chi: f64 },
    Kudryashov { alpha: f64, beta: f64, sigma: f64, branch: u8, mu: f64, chi: f64 },
    MappedKudryashov { delta1: f64, delta3: f64, delta4: f64, mu: f64, chi: f64, branch: u8 },
}

/// Axes as `[lo, hi, count]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t: Option<(f64, f64, usize)>,
    pub x: Option<(f64, f64, usize)>,
}

impl GridSpec {
    /// Parses `t0:t1:nt,x0:x1:nx`; either axis may be omitted by leaving it
    /// empty (`,x0:x1:nx`).
    pub fn parse(s: &str) -> Result<GridSpec, String> {
        let axis = |part: &str| -> Result<Option<(f64, f64, usize)>, String> {
            if part.trim().is_empty() {
                return Ok(None);
            }
            let f: Vec<&str> = part.split(':').collect();
            if f.len() != 3 {
                return Err(format!("axis `{part}` must be lo:hi:count"));
            }
            let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
            let n = f[2].trim().parse::<usize>().map_err(|e| format!("`{}`: {e}", f[2]))?;
            Ok(Some((num(f[0])?, num(f[1])?, n)))
        };
        let mut parts = s.splitn(2, ',');
        let t = axis(parts.next().unwrap_or(""))?;
        let x = axis(parts.next().unwrap_or(""))?;
        Ok(GridSpec { t, x })
    }

    /// The grid with defaults for missing axes.
    pub fn resolve(spec: Option<&GridSpec>, t_default: (f64, f64), x_default: (f64, f64)) -> Result<Grid2, CliError> {
        let pick = |axis: Option<(f64, f64, usize)>, d: (f64, f64), name: &str| -> Result<Vec<f64>, CliError> {
            let (lo, hi, n) = axis.unwrap_or((d.0, d.1, 21));
            if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(CliError::config(format!("invalid {name} grid [{lo}, {hi}] with {n} points")));
            }
            Ok(if n == 1 { vec![lo] } else { linspace(lo, hi, n) })
        };
        let (t, x) = (spec.and_then(|g| g.t), spec.and_then(|g| g.x));
        Ok(Grid2::new(pick(t, t_default, "t")?, pick(x, x_default, "x")?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Largest normalized residual accepted by `exact`.
    #[serde(default = "default_verify")]
    pub verify: f64,
    /// Identity-test threshold ε_zero.
    #[serde(default)]
    pub zero_eps: Option<f64>,
}

fn default_rtol() -> f64 {
    1e-8
}
fn default_atol() -> f64 {
    1e-10
}
fn default_verify() -> f64 {
    1e-7
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: default_rtol(), atol: default_atol(), verify: default_verify(), zero_eps: None }
    }
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<JobConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [("rtol", t.rtol), ("atol", t.atol), ("verify", t.verify)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if let Some(e) = t.zero_eps {
            if !(e > 0.0) {
                return Err(CliError::config(format!("zero_eps must be positive, got {e}")));
            }
        }
        if self.equation.is_some() && self.preset.is_some() {
            return Err(CliError::config("give either `equation` or `preset`, not both"));
        }
        Ok(())
    }

    /// The equation of the job.
    pub fn equation(&self) -> Result<KawaharaEq, CliError> {
        match (&self.equation, self.preset) {
            (Some(spec), None) => spec.build().map_err(|e| CliError::config(format!("equation: {e}"))),
            (None, Some(Preset::Ice)) => Ok(ice_preset()),
            (None, None) => Err(CliError::config("the job needs an `equation` or a `preset`")),
            (Some(_), Some(_)) => Err(CliError::config("give either `equation` or `preset`, not both")),
        }
    }

    /// Equation domain if the job has one, else `[1, 2]`.
    pub fn t_domain(&self) -> Domain {
        self.equation().map(|e| e.domain).unwrap_or_else(|_| Domain::t(1.0, 2.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag() {
        let g = GridSpec::parse("1:2:3,-1:1:5").unwrap();
        assert_eq!(g.t, Some((1.0, 2.0, 3)));
        assert_eq!(g.x, Some((-1.0, 1.0, 5)));
        assert_eq!(GridSpec::parse(",0:1:2").unwrap().t, None);
        assert!(GridSpec::parse("1:2").is_err());
    }

    #[test]
    fn parses_job() {
        let cfg: JobConfig = serde_json::from_str(
            r#"{"preset": "ice", "ivp": {"gamma": [0.008333, 0, 0, 0, 0]},
                "exact": {"family": "tanh_n2", "k": 1, "chi": 0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.ivp.unwrap().span, [0.0, 5.0]);
        assert_eq!(cfg.exact, Some(ExactSpec::TanhN2 { k: 1.0, chi: 0.0 }));
        assert!(serde_json::from_str::<JobConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
