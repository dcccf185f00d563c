//! Long waves under a growing ice cover.

use serde::{Deserialize, Serialize};

use crate::expr::{Domain, Expr};

use super::KawaharaEq;

/// Dispersion coefficient λ in `β = λt^{1/2}` (time in hours).
pub const ICE_LAMBDA: f64 = 2.20215e-5;
/// Fifth-order coefficient δ in `σ = δt^{3/2}` (time in hours).
pub const ICE_DELTA: f64 = 1.05566e-8;

const G: f64 = 9.81;

/// `u_t + uu_x + λt^{1/2}u_xxx + δt^{3/2}u_xxxxx = 0` on t ∈ [1, 240], the
/// form reached after `u = 1 + αv` with the published numeric coefficients.
pub fn ice_preset() -> KawaharaEq {
    let t = Expr::t();
    KawaharaEq::new(
        1.0,
        Expr::one(),
        ICE_LAMBDA * Expr::sqrt(t.clone()),
        ICE_DELTA * Expr::powf(t, 1.5),
        Domain::t(1.0, 240.0),
    )
    .expect("ice preset coefficients are nonvanishing on [1, 240]")
}

/// Physical inputs in SI units. The ice thickness grows as `h = h0·√t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcePhysical {
    /// wave amplitude
    pub a: f64,
    /// fluid depth
    pub depth: f64,
    pub h0: f64,
    /// Young's modulus
    pub e: f64,
    /// Poisson's ratio
    pub nu: f64,
    pub rho_w: f64,
    pub rho_i: f64,
    pub sigma0: f64,
    pub sigma_xx: f64,
    /// wavelength
    pub lambda_wave: f64,
}

impl Default for IcePhysical {
    fn default() -> Self {
        IcePhysical {
            a: 0.1,
            depth: 10.0,
            h0: 0.04,
            e: 3e9,
            nu: 0.3,
            rho_w: 1030.0,
            rho_i: 916.0,
            sigma0: 1.2e6,
            sigma_xx: 1e5,
            lambda_wave: 100.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IceCoefficients {
    /// `ε = a/H`
    pub epsilon: f64,
    /// `ϰ(t) = h(σ₀ − σ_xx)/(ρ_w g λ²)`
    pub varkappa: Expr,
    /// `γ(t) = Eh³/(12(1 − ν²)ρ_w g λ⁴)`
    pub gamma: Expr,
}

/// Coefficients of the dimensionless model in SI units, g = 9.81, without
/// any conversion of the time unit.
pub fn ice_coefficients(p: &IcePhysical) -> IceCoefficients {
    let h = p.h0 * Expr::sqrt(Expr::t());
    let varkappa = (p.sigma0 - p.sigma_xx) / (p.rho_w * G * p.lambda_wave.powi(2)) * h.clone();
    let gamma = p.e / (12.0 * (1.0 - p.nu * p.nu) * p.rho_w * G * p.lambda_wave.powi(4)) * Expr::powf(h, 3.0);
    IceCoefficients { epsilon: p.a / p.depth, varkappa, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values() {
        let eq = ice_preset();
        assert_eq!(eq.n, 1.0);
        let (a, b, s) = eq.coefficients_at(1.0).unwrap();
        assert_eq!((a, b, s), (1.0, 2.20215e-5, 1.05566e-8));
        let (_, b, s) = eq.coefficients_at(4.0).unwrap();
        assert!((b - 2.0 * ICE_LAMBDA).abs() < 1e-20 && (s - 8.0 * ICE_DELTA).abs() < 1e-22);
    }

    #[test]
    fn physical_coefficients() {
        let p = IcePhysical::default();
        let c = ice_coefficients(&p);
        assert!((c.epsilon - 0.01).abs() < 1e-16);
        let g1 = c.gamma.eval(&[("t", 2.0)]).unwrap();
        let c2 = ice_coefficients(&IcePhysical { h0: 2.0 * p.h0, ..p });
        let g2 = c2.gamma.eval(&[("t", 2.0)]).unwrap();
        assert!((g2 / g1 - 8.0).abs() < 1e-12);
        let flat = ice_coefficients(&IcePhysical { sigma_xx: p.sigma0, ..p });
        assert_eq!(flat.varkappa.eval(&[("t", 3.0)]).unwrap(), 0.0);
    }
}
