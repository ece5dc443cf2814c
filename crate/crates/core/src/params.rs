//! Physical parameters and the derived coefficients of the three-field
//! reformulation.
//!
//! The displacement/pressure pair `(u, p)` is traded for `(u, ξ, η)` with
//!
//! ```text
//! ξ = α p − (1/λ) div u,      η = c0 p + α div u,
//! p = κ1 ξ + κ2 η,            div u = κ1 η − κ3 ξ,
//! ```
//!
//! where `κ1 = λα/(λα² + c0)`, `κ2 = 1/(λα² + c0)` and `κ3 = λ c0/(λα² + c0)`.
//! All three stay bounded as `λ → ∞`, which is what keeps the scheme free of
//! volumetric locking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Material and fluid parameters. Permeability is isotropic (`K·I`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Young's modulus (Pa).
    #[serde(rename = "E")]
    pub young: f64,
    /// Poisson ratio.
    #[serde(rename = "nu")]
    pub poisson: f64,
    /// Biot–Willis constant.
    pub alpha: f64,
    /// Constrained specific storage (1/Pa).
    pub c0: f64,
    /// Scalar permeability (m²).
    #[serde(rename = "K")]
    pub permeability: f64,
    /// Fluid viscosity (Pa·s).
    pub mu_f: f64,
    /// Gravity body-force vector ρf·g (N/m³).
    #[serde(default)]
    pub rho_f_g: [f64; 2],
}

impl PhysicalParams {
    /// Parameters of the first manufactured test (`c0 = 1e3`).
    pub fn test1() -> Self {
        Self {
            young: 1e6,
            poisson: 0.499,
            alpha: 1.0,
            c0: 1e3,
            permeability: 1e-5,
            mu_f: 1.0,
            rho_f_g: [0.0, 0.0],
        }
    }

    /// Parameters of the second manufactured test (`c0 = 2`).
    pub fn test2() -> Self {
        Self {
            c0: 2.0,
            ..Self::test1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &str); 6] = [
            (self.young > 0.0, "E must be positive"),
            (
                (0.0..0.5).contains(&self.poisson),
                "nu must lie in [0, 0.5)",
            ),
            (self.alpha > 0.0, "alpha must be positive"),
            (self.c0 >= 0.0, "c0 must be nonnegative"),
            (self.permeability > 0.0, "K must be positive"),
            (self.mu_f > 0.0, "mu_f must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Parameter(msg.into()));
            }
        }
        if !self.rho_f_g.iter().all(|g| g.is_finite()) {
            return Err(Error::Parameter("rho_f_g must be finite".into()));
        }
        Ok(())
    }

    /// Hydraulic mobility `K/μf`.
    pub fn mobility(&self) -> f64 {
        self.permeability / self.mu_f
    }

    pub fn derived(&self) -> Result<DerivedCoeffs> {
        self.validate()?;
        let (lambda, mu) = derive_lame(self)?;
        let kappas = derive_kappas(lambda, self.alpha, self.c0)?;
        Ok(DerivedCoeffs {
            lambda,
            mu,
            alpha: self.alpha,
            c0: self.c0,
            kappa1: kappas.0,
            kappa2: kappas.1,
            kappa3: kappas.2,
        })
    }
}

/// Lamé constants from `(E, ν)`.
pub fn derive_lame(params: &PhysicalParams) -> Result<(f64, f64)> {
    let (e, nu) = (params.young, params.poisson);
    if !(e > 0.0) {
        return Err(Error::Parameter("E must be positive".into()));
    }
    if !(0.0..0.5).contains(&nu) {
        return Err(Error::Parameter(format!(
            "nu = {nu} makes lambda singular or negative; need 0 <= nu < 0.5"
        )));
    }
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

/// `(κ1, κ2, κ3)` for the given `λ > 0`, `α > 0`, `c0 ≥ 0`.
pub fn derive_kappas(lambda: f64, alpha: f64, c0: f64) -> Result<(f64, f64, f64)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "lambda must be positive and finite (got {lambda})"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive (got {alpha})")));
    }
    if !(c0 >= 0.0) {
        return Err(Error::Parameter(format!("c0 must be nonnegative (got {c0})")));
    }
    // Divide through by λ so the λ → ∞ limit stays well conditioned.
    let denom = alpha * alpha + c0 / lambda;
    let kappa1 = alpha / denom;
    let kappa2 = 1.0 / (lambda * denom);
    let kappa3 = c0 / denom;
    Ok((kappa1, kappa2, kappa3))
}

/// Lamé constants plus the reformulation coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoeffs {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub c0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
}

impl DerivedCoeffs {
    /// `(p, div u) ↦ (ξ, η)`.
    pub fn to_xi_eta(&self, p: f64, div_u: f64) -> (f64, f64) {
        let xi = self.alpha * p - div_u / self.lambda;
        let eta = self.c0 * p + self.alpha * div_u;
        (xi, eta)
    }

    /// `(ξ, η) ↦ (p, div u)`.
    pub fn from_xi_eta(&self, xi: f64, eta: f64) -> (f64, f64) {
        let p = self.kappa1 * xi + self.kappa2 * eta;
        let q = self.kappa1 * eta - self.kappa3 * xi;
        (p, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn lame_examples() {
        let mut p = PhysicalParams::test1();
        p.poisson = 0.0;
        assert_eq!(derive_lame(&p).unwrap(), (0.0, 5e5));

        p.poisson = 0.499;
        let (l, m) = derive_lame(&p).unwrap();
        assert!(rel(l, 1.664443e8) < 1e-6);
        assert!(rel(m, 3.335557e5) < 1e-6);

        p.poisson = 0.25;
        let (l, m) = derive_lame(&p).unwrap();
        assert!(rel(l, 4e5) < 1e-14 && rel(m, 4e5) < 1e-14);
    }

    #[test]
    fn lame_rejects_incompressible() {
        let mut p = PhysicalParams::test1();
        p.poisson = 0.5;
        assert!(matches!(derive_lame(&p), Err(Error::Parameter(_))));
        p.poisson = 0.6;
        assert!(derive_lame(&p).is_err());
    }

    #[test]
    fn kappa_examples() {
        let (k1, k2, k3) = derive_kappas(123.0, 1.0, 0.0).unwrap();
        assert_eq!(k3, 0.0);
        assert!(rel(k1, 1.0) < 1e-15);
        assert!(rel(k2, 1.0 / 123.0) < 1e-15);

        let lambda = 166_444_296.197_464_82;
        let (k1, k2, k3) = derive_kappas(lambda, 1.0, 1e3).unwrap();
        assert!(rel(k1, 0.999_993_992_020_064) < 1e-13);
        assert!(rel(k2, 6.007_979_936_024_358e-9) < 1e-13);
        assert!(rel(k3, 999.993_992_020_064) < 1e-13);

        let (k1, k2, k3) = derive_kappas(lambda, 1.0, 2.0).unwrap();
        assert!(rel(k1, 0.999_999_987_983_968) < 1e-13);
        assert!(rel(k2, 6.008_015_959_871_621_5e-9) < 1e-13);
        assert!(rel(k3, 1.999_999_975_967_936) < 1e-13);
    }

    #[test]
    fn kappas_bounded_as_lambda_grows() {
        let (k1, k2, k3) = derive_kappas(1e15, 2.0, 5.0).unwrap();
        assert!(rel(k1, 0.5) < 1e-12);
        assert!(rel(k3, 5.0 / 4.0) < 1e-12);
        assert!(k2 > 0.0 && k2 < 1e-14);
    }

    #[test]
    fn xi_eta_examples() {
        let c = PhysicalParams::test2().derived().unwrap();
        assert_eq!(c.to_xi_eta(0.0, 0.0), (0.0, 0.0));

        let (xi, eta) = c.to_xi_eta(2.0, 3.0);
        let (p, q) = c.from_xi_eta(xi, eta);
        assert!(rel(p, 2.0) < 1e-12 && rel(q, 3.0) < 1e-12);

        // exact fields of the second test at (1, 1, 1)
        let (xi, eta) = c.to_xi_eta(2.0, 4.0);
        assert!(rel(xi, 2.0 * c.alpha - 4.0 / c.lambda) < 1e-15);
        assert!(rel(eta, 2.0 * c.c0 + 4.0 * c.alpha) < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(PhysicalParams::test1().validate().is_ok());
        let bad = PhysicalParams {
            permeability: 0.0,
            ..PhysicalParams::test1()
        };
        assert!(bad.validate().is_err());
        let bad = PhysicalParams {
            c0: -1.0,
            ..PhysicalParams::test1()
        };
        assert!(bad.derived().is_err());
    }

    #[test]
    fn params_json_names() {
        let p: PhysicalParams = serde_json::from_str(
            r#"{"E": 1e6, "nu": 0.3, "alpha": 1, "c0": 0, "K": 1e-5, "mu_f": 1}"#,
        )
        .unwrap();
        assert_eq!(p.rho_f_g, [0.0, 0.0]);
        assert_eq!(p.poisson, 0.3);
        assert!(serde_json::from_str::<PhysicalParams>(r#"{"E": 1, "bogus": 2}"#).is_err());
    }
}
