//! Hencky–Mises stress laws.
//!
//! A law is determined by a scalar function `Φ` of the deviatoric invariant
//! `ρ = dev(ε) = tr(ε²) − ½ tr²(ε)` and a bulk function `κ`:
//!
//! ```text
//! μ̃(ρ) = 2 μ Φ′(ρ),   λ̃(ρ) = κ − ½ μ̃(ρ),
//! σ(ε) = λ̃(ρ) tr(ε) I + μ̃(ρ) ε,
//! N(ε) = σ(ε) − (1/λ) tr(ε) I.
//! ```

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Symmetric 2×2 tensor stored as `(e11, e22, e12)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub e11: f64,
    pub e22: f64,
    pub e12: f64,
}

impl SymMat2 {
    pub const fn new(e11: f64, e22: f64, e12: f64) -> Self {
        Self { e11, e22, e12 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 1.0, 0.0)
    }

    /// Symmetric part of a displacement gradient `g[i][j] = ∂u_i/∂x_j`.
    pub fn sym_grad(g: [[f64; 2]; 2]) -> Self {
        Self::new(g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0]))
    }

    pub fn trace(&self) -> f64 {
        self.e11 + self.e22
    }

    /// Double contraction `a : b`.
    pub fn ddot(&self, other: &Self) -> f64 {
        self.e11 * other.e11 + self.e22 * other.e22 + 2.0 * self.e12 * other.e12
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// `τ n`
    pub fn apply(&self, n: [f64; 2]) -> [f64; 2] {
        [
            self.e11 * n[0] + self.e12 * n[1],
            self.e12 * n[0] + self.e22 * n[1],
        ]
    }
}

impl Add for SymMat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.e11 + o.e11, self.e22 + o.e22, self.e12 + o.e12)
    }
}

impl Sub for SymMat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.e11 - o.e11, self.e22 - o.e22, self.e12 - o.e12)
    }
}

impl Mul<SymMat2> for f64 {
    type Output = SymMat2;
    fn mul(self, m: SymMat2) -> SymMat2 {
        SymMat2::new(self * m.e11, self * m.e22, self * m.e12)
    }
}

/// The deviatoric invariant `tr(ε²) − ½ tr²(ε) = ½(e11 − e22)² + 2 e12²`.
pub fn dev_scalar(eps: &SymMat2) -> f64 {
    let d = eps.e11 - eps.e22;
    0.5 * d * d + 2.0 * eps.e12 * eps.e12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    /// `Φ(ρ) = ρ`, `κ = λ + μ`: the Cauchy stress of linear elasticity.
    Linear,
    /// `Φ′(ρ) = ½(1 + ρ)^(−1/2)`, `κ = 1/λ + μ/2`.
    Test1,
    /// `Φ′(ρ) = 1 − ½ e^(−ρ)`, `κ = 1/λ + (μ/2) e^(−ρ)`.
    Test2,
}

impl LawKind {
    pub fn name(self) -> &'static str {
        match self {
            LawKind::Linear => "linear",
            LawKind::Test1 => "test1",
            LawKind::Test2 => "test2",
        }
    }
}

impl std::str::FromStr for LawKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(LawKind::Linear),
            "test1" => Ok(LawKind::Test1),
            "test2" => Ok(LawKind::Test2),
            other => Err(format!("unknown law `{other}` (expected linear, test1 or test2)")),
        }
    }
}

/// Coefficients of the Picard-linearized `N`: `N_lin(ε) = shear ε + dilatation tr(ε) I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenCoefficients {
    /// `μ̃(ρ)`
    pub shear: f64,
    /// `λ̃(ρ) − 1/λ`
    pub dilatation: f64,
}

impl FrozenCoefficients {
    pub fn apply(&self, eps: &SymMat2) -> SymMat2 {
        self.shear * *eps + (self.dilatation * eps.trace()) * SymMat2::identity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstitutiveLaw {
    pub kind: LawKind,
    pub lambda: f64,
    pub mu: f64,
}

impl ConstitutiveLaw {
    pub fn new(kind: LawKind, lambda: f64, mu: f64) -> Self {
        Self { kind, lambda, mu }
    }

    pub fn phi(&self, rho: f64) -> f64 {
        match self.kind {
            LawKind::Linear => rho,
            LawKind::Test1 => (1.0 + rho).sqrt(),
            LawKind::Test2 => rho + 0.5 * (-rho).exp(),
        }
    }

    pub fn phi_prime(&self, rho: f64) -> f64 {
        match self.kind {
            LawKind::Linear => 1.0,
            LawKind::Test1 => 0.5 / (1.0 + rho).sqrt(),
            LawKind::Test2 => 1.0 - 0.5 * (-rho).exp(),
        }
    }

    pub fn phi_second(&self, rho: f64) -> f64 {
        match self.kind {
            LawKind::Linear => 0.0,
            LawKind::Test1 => -0.25 / ((1.0 + rho) * (1.0 + rho).sqrt()),
            LawKind::Test2 => 0.5 * (-rho).exp(),
        }
    }

    pub fn kappa_prime(&self, rho: f64) -> f64 {
        match self.kind {
            LawKind::Linear | LawKind::Test1 => 0.0,
            LawKind::Test2 => -0.5 * self.mu * (-rho).exp(),
        }
    }

    /// `(dμ̃/dρ, dλ̃/dρ)`
    pub fn lame_tilde_derivative(&self, rho: f64) -> (f64, f64) {
        let dmu = 2.0 * self.mu * self.phi_second(rho);
        let dlambda = match self.kind {
            LawKind::Linear => 0.0,
            _ => self.kappa_prime(rho) - 0.5 * dmu,
        };
        (dmu, dlambda)
    }

    /// `κ(ρ) − 1/λ`, kept separate so the shifted coefficients avoid
    /// cancellation against `1/λ`.
    fn kappa_shifted(&self, rho: f64) -> f64 {
        match self.kind {
            LawKind::Linear => self.lambda + self.mu - 1.0 / self.lambda,
            LawKind::Test1 => 0.5 * self.mu,
            LawKind::Test2 => 0.5 * self.mu * (-rho).exp(),
        }
    }

    pub fn kappa(&self, rho: f64) -> f64 {
        match self.kind {
            LawKind::Linear => self.lambda + self.mu,
            _ => 1.0 / self.lambda + self.kappa_shifted(rho),
        }
    }

    /// `(μ̃(ρ), λ̃(ρ))`
    pub fn lame_tilde(&self, rho: f64) -> (f64, f64) {
        let mu_t = 2.0 * self.mu * self.phi_prime(rho);
        let lambda_t = match self.kind {
            LawKind::Linear => self.lambda,
            _ => self.kappa(rho) - 0.5 * mu_t,
        };
        (mu_t, lambda_t)
    }

    pub fn frozen(&self, rho: f64) -> FrozenCoefficients {
        let shear = 2.0 * self.mu * self.phi_prime(rho);
        let dilatation = match self.kind {
            LawKind::Linear => self.lambda - 1.0 / self.lambda,
            LawKind::Test1 => 0.5 * self.mu * (1.0 - 1.0 / (1.0 + rho).sqrt()),
            LawKind::Test2 => self.kappa_shifted(rho) - 0.5 * shear,
        };
        FrozenCoefficients { shear, dilatation }
    }

    /// Picard coefficients frozen at the strain of the previous iterate.
    pub fn frozen_coefficients(&self, eps_prev: &SymMat2) -> FrozenCoefficients {
        self.frozen(dev_scalar(eps_prev))
    }

    pub fn stress(&self, eps: &SymMat2) -> SymMat2 {
        let (mu_t, lambda_t) = self.lame_tilde(dev_scalar(eps));
        mu_t * *eps + (lambda_t * eps.trace()) * SymMat2::identity()
    }

    pub fn n_tensor(&self, eps: &SymMat2) -> SymMat2 {
        self.frozen_coefficients(eps).apply(eps)
    }

    /// `Ψ(ε) = (κ/2) tr²(ε) + μ Φ(dev ε)`, with `κ` taken at the current `ρ`.
    pub fn stored_energy(&self, eps: &SymMat2) -> f64 {
        let rho = dev_scalar(eps);
        let tr = eps.trace();
        0.5 * self.kappa(rho) * tr * tr + self.mu * self.phi(rho)
    }
}
