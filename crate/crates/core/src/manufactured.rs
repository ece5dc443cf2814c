//! Manufactured solutions on the unit square.
//!
//! * `test1`: `u = t² (sin πx sin πy, sin πx sin πy)`, `p = −(t/π) sin(πx + πy)`,
//!   with the law `Φ′(ρ) = ½(1 + ρ)^(−1/2)` and `c0 = 1e3`.
//! * `test2`: `u = t (x², y²)`, `p = t (x² + y²)`, with the law
//!   `Φ′(ρ) = 1 − ½ e^(−ρ)` and `c0 = 2`.
//!
//! The body force is `−div σ(u) + α∇p`, evaluated from hand-coded second
//! derivatives of `u` through the chain rule
//! `div σ = μ̃′ ε ∇ρ + μ̃ div ε + λ̃′ tr(ε) ∇ρ + λ̃ ∇tr(ε)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::ProblemData;
use crate::constitutive::{dev_scalar, ConstitutiveLaw, LawKind, SymMat2};
use crate::error::Result;
use crate::params::{DerivedCoeffs, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Test1,
    Test2,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Test1 => "test1",
            CaseKind::Test2 => "test2",
        }
    }

    pub fn law(self) -> LawKind {
        match self {
            CaseKind::Test1 => LawKind::Test1,
            CaseKind::Test2 => LawKind::Test2,
        }
    }

    pub fn default_params(self) -> PhysicalParams {
        match self {
            CaseKind::Test1 => PhysicalParams::test1(),
            CaseKind::Test2 => PhysicalParams::test2(),
        }
    }
}

impl std::str::FromStr for CaseKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "test1" => Ok(CaseKind::Test1),
            "test2" => Ok(CaseKind::Test2),
            other => Err(format!("unknown case `{other}` (expected test1 or test2)")),
        }
    }
}

/// Exact fields and derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields {
    pub u: [f64; 2],
    /// `grad_u[i][j] = ∂u_i/∂x_j`
    pub grad_u: [[f64; 2]; 2],
    /// `hess_u[i][j][k] = ∂²u_i/∂x_j∂x_k`
    pub hess_u: [[[f64; 2]; 2]; 2],
    pub p: f64,
    pub grad_p: [f64; 2],
    pub laplace_p: f64,
    pub dp_dt: f64,
    pub div_u: f64,
    pub ddiv_u_dt: f64,
    pub strain: SymMat2,
    pub xi: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub params: PhysicalParams,
    pub coeffs: DerivedCoeffs,
    pub law: ConstitutiveLaw,
}

impl ManufacturedCase {
    /// The case with its own parameter set.
    pub fn new(kind: CaseKind) -> Result<Self> {
        Self::with_params(kind, kind.default_params())
    }

    pub fn with_params(kind: CaseKind, params: PhysicalParams) -> Result<Self> {
        Self::with_law(kind, kind.law(), params)
    }

    /// Exact fields of `kind` paired with an arbitrary law; the forcing follows
    /// the law.
    pub fn with_law(kind: CaseKind, law: LawKind, params: PhysicalParams) -> Result<Self> {
        let coeffs = params.derived()?;
        Ok(Self {
            kind,
            params,
            coeffs,
            law: ConstitutiveLaw::new(law, coeffs.lambda, coeffs.mu),
        })
    }

    pub fn exact_fields(&self, x: [f64; 2], t: f64) -> ExactFields {
        let [x, y] = x;
        let mut f = match self.kind {
            CaseKind::Test1 => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                let s = sx * sy;
                let t2 = t * t;
                let g = [PI * cx * sy, PI * sx * cy];
                let h = [[-PI * PI * s, PI * PI * cx * cy], [PI * PI * cx * cy, -PI * PI * s]];
                let (sxy, cxy) = (PI * (x + y)).sin_cos();
                ExactFields {
                    u: [t2 * s, t2 * s],
                    grad_u: [[t2 * g[0], t2 * g[1]], [t2 * g[0], t2 * g[1]]],
                    hess_u: [h.map(|r| r.map(|v| t2 * v)), h.map(|r| r.map(|v| t2 * v))],
                    p: -t / PI * sxy,
                    grad_p: [-t * cxy, -t * cxy],
                    laplace_p: 2.0 * PI * t * sxy,
                    dp_dt: -sxy / PI,
                    div_u: t2 * PI * sxy,
                    ddiv_u_dt: 2.0 * t * PI * sxy,
                    strain: SymMat2::default(),
                    xi: 0.0,
                    eta: 0.0,
                }
            }
            CaseKind::Test2 => ExactFields {
                u: [t * x * x, t * y * y],
                grad_u: [[2.0 * t * x, 0.0], [0.0, 2.0 * t * y]],
                hess_u: [[[2.0 * t, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 2.0 * t]]],
                p: t * (x * x + y * y),
                grad_p: [2.0 * t * x, 2.0 * t * y],
                laplace_p: 4.0 * t,
                dp_dt: x * x + y * y,
                div_u: 2.0 * t * (x + y),
                ddiv_u_dt: 2.0 * (x + y),
                strain: SymMat2::default(),
                xi: 0.0,
                eta: 0.0,
            },
        };
        f.strain = SymMat2::sym_grad(f.grad_u);
        (f.xi, f.eta) = self.coeffs.to_xi_eta(f.p, f.div_u);
        f
    }

    /// `dev ε(u)` in closed form.
    pub fn dev_closed_form(&self, x: [f64; 2], t: f64) -> f64 {
        let [x, y] = x;
        match self.kind {
            CaseKind::Test1 => {
                let (sx, cx) = (PI * x).sin_cos();
                let (sy, cy) = (PI * y).sin_cos();
                PI * PI * t.powi(4) * (sx * sx * cy * cy + cx * cx * sy * sy)
            }
            CaseKind::Test2 => 2.0 * t * t * (x - y).powi(2),
        }
    }

    pub fn stress_divergence(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        divergence_of_stress(&self.law, &self.exact_fields(x, t))
    }
}

/// `div σ(u)` from the exact gradient and Hessian of `u`.
pub fn divergence_of_stress(law: &ConstitutiveLaw, f: &ExactFields) -> [f64; 2] {
    let eps = f.strain;
    let h = &f.hess_u;
    // ∂_k of e11, e22, e12
    let de11 = [h[0][0][0], h[0][0][1]];
    let de22 = [h[1][1][0], h[1][1][1]];
    let de12 = [0.5 * (h[0][1][0] + h[1][0][0]), 0.5 * (h[0][1][1] + h[1][0][1])];
    let diff = eps.e11 - eps.e22;
    let grad_rho = [0, 1].map(|k| diff * (de11[k] - de22[k]) + 4.0 * eps.e12 * de12[k]);
    let grad_tr = [0, 1].map(|k| de11[k] + de22[k]);
    let div_eps = [de11[0] + de12[1], de12[0] + de22[1]];
    let rho = dev_scalar(&eps);
    let (mu_t, lambda_t) = law.lame_tilde(rho);
    let (dmu, dlambda) = law.lame_tilde_derivative(rho);
    let tr = eps.trace();
    let eps_grad_rho = eps.apply(grad_rho);
    [0, 1].map(|i| {
        dmu * eps_grad_rho[i] + mu_t * div_eps[i] + dlambda * tr * grad_rho[i] + lambda_t * grad_tr[i]
    })
}

impl ProblemData for ManufacturedCase {
    fn body_force(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let f = self.exact_fields(x, t);
        let div = divergence_of_stress(&self.law, &f);
        let a = self.params.alpha;
        [a * f.grad_p[0] - div[0], a * f.grad_p[1] - div[1]]
    }

    fn source(&self, x: [f64; 2], t: f64) -> f64 {
        let [x, y] = x;
        let (c0, a, m) = (self.params.c0, self.params.alpha, self.params.mobility());
        match self.kind {
            CaseKind::Test1 => (-c0 / PI + 2.0 * a * PI * t - 2.0 * PI * t * m) * (PI * x + PI * y).sin(),
            CaseKind::Test2 => c0 * (x * x + y * y) + 2.0 * a * (x + y) - 4.0 * t * m,
        }
    }

    fn traction(&self, x: [f64; 2], t: f64, normal: [f64; 2]) -> [f64; 2] {
        let f = self.exact_fields(x, t);
        let sn = self.law.stress(&f.strain).apply(normal);
        let ap = self.params.alpha * f.p;
        [sn[0] - ap * normal[0], sn[1] - ap * normal[1]]
    }

    fn flux(&self, x: [f64; 2], t: f64, normal: [f64; 2]) -> f64 {
        let f = self.exact_fields(x, t);
        let g = self.params.rho_f_g;
        -self.params.mobility() * ((f.grad_p[0] - g[0]) * normal[0] + (f.grad_p[1] - g[1]) * normal[1])
    }

    fn displacement(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        self.exact_fields(x, t).u
    }

    fn xi_eta(&self, x: [f64; 2], t: f64) -> (f64, f64) {
        let f = self.exact_fields(x, t);
        (f.xi, f.eta)
    }

    fn initial_displacement(&self, x: [f64; 2]) -> [f64; 2] {
        self.exact_fields(x, 0.0).u
    }

    fn initial_pressure(&self, x: [f64; 2]) -> f64 {
        self.exact_fields(x, 0.0).p
    }

    fn initial_divergence(&self, x: [f64; 2]) -> f64 {
        self.exact_fields(x, 0.0).div_u
    }
}

/// All forcing, boundary and initial data zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct Homogeneous;

impl ProblemData for Homogeneous {
    fn body_force(&self, _: [f64; 2], _: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn source(&self, _: [f64; 2], _: f64) -> f64 {
        0.0
    }
    fn traction(&self, _: [f64; 2], _: f64, _: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
    fn flux(&self, _: [f64; 2], _: f64, _: [f64; 2]) -> f64 {
        0.0
    }
    fn displacement(&self, _: [f64; 2], _: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn xi_eta(&self, _: [f64; 2], _: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
    fn initial_displacement(&self, _: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
    fn initial_pressure(&self, _: [f64; 2]) -> f64 {
        0.0
    }
    fn initial_divergence(&self, _: [f64; 2]) -> f64 {
        0.0
    }
}
