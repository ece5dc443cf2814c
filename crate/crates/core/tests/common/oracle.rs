//! Brute-force dense reference for one step of the three-field scheme.
//!
//! Shares only the mesh, the dof numbering and the quadrature point sets with
//! the library. Basis functions come from inverting a monomial Vandermonde
//! matrix on each physical triangle.

#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};
use poromfem::assembly::{FlowBoundary, ProblemData};
use poromfem::constitutive::LawKind;
use poromfem::dofmap::DofMap;
use poromfem::mesh::Mesh;
use poromfem::params::PhysicalParams;
use poromfem::quadrature::{gauss_legendre_3, triangle_rule};

pub struct Coefficients {
    pub lambda: f64,
    pub mu: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub mobility: f64,
    pub gravity: [f64; 2],
}

impl Coefficients {
    /// Inverts `ξ = αp − q/λ`, `η = c0 p + α q` for `p` and `q`.
    pub fn new(p: &PhysicalParams) -> Self {
        let (e, nu) = (p.young, p.poisson);
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        // [[α, −1/λ], [c0, α]] (p, q) = (ξ, η)
        let m = nalgebra::Matrix2::new(p.alpha, -1.0 / lambda, p.c0, p.alpha);
        let inv = m.try_inverse().unwrap();
        // p = κ1 ξ + κ2 η and q = κ1 η − κ3 ξ
        let (kappa1, kappa2, kappa3) = (inv[(0, 0)], inv[(0, 1)], -inv[(1, 0)]);
        Self {
            lambda,
            mu,
            kappa1,
            kappa2,
            kappa3,
            mobility: p.permeability / p.mu_f,
            gravity: p.rho_f_g,
        }
    }
}

/// `(μ̃, λ̃ − 1/λ)` at `ρ = ½(ε11 − ε22)² + 2ε12²`.
pub fn frozen(law: LawKind, c: &Coefficients, grad_u: [[f64; 2]; 2]) -> (f64, f64) {
    let e12 = 0.5 * (grad_u[0][1] + grad_u[1][0]);
    let d = grad_u[0][0] - grad_u[1][1];
    let rho = 0.5 * d * d + 2.0 * e12 * e12;
    let mu = c.mu;
    match law {
        LawKind::Linear => (2.0 * mu, c.lambda - 1.0 / c.lambda),
        LawKind::Test1 => (mu / (1.0 + rho).sqrt(), 0.5 * mu - 0.5 * mu / (1.0 + rho).sqrt()),
        LawKind::Test2 => (2.0 * mu - mu * (-rho).exp(), mu * (-rho).exp() - mu),
    }
}

/// Quadratic basis on a physical triangle through its six nodes.
struct QuadraticBasis {
    /// Row `k` holds the monomial coefficients of basis function `k`.
    coef: Matrix6<f64>,
}

fn monomials(x: [f64; 2]) -> Vector6<f64> {
    Vector6::new(1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1])
}

fn monomial_grads(x: [f64; 2]) -> [Vector6<f64>; 2] {
    [
        Vector6::new(0.0, 1.0, 0.0, 2.0 * x[0], x[1], 0.0),
        Vector6::new(0.0, 0.0, 1.0, 0.0, x[0], 2.0 * x[1]),
    ]
}

impl QuadraticBasis {
    fn new(nodes: &[[f64; 2]; 6]) -> Self {
        let v = Matrix6::from_fn(|i, j| monomials(nodes[i])[j]);
        // V c_k = e_k for each basis function k, i.e. C = V⁻¹ with columns c_k
        let inv = v.try_inverse().expect("degenerate element");
        Self { coef: inv.transpose() }
    }

    fn values(&self, x: [f64; 2]) -> [f64; 6] {
        let m = self.coef * monomials(x);
        std::array::from_fn(|k| m[k])
    }

    fn grads(&self, x: [f64; 2]) -> [[f64; 2]; 6] {
        let [gx, gy] = monomial_grads(x);
        let (a, b) = (self.coef * gx, self.coef * gy);
        std::array::from_fn(|k| [a[k], b[k]])
    }
}

struct LinearBasis {
    coef: Matrix3<f64>,
}

impl LinearBasis {
    fn new(nodes: &[[f64; 2]; 3]) -> Self {
        let v = Matrix3::from_fn(|i, j| [1.0, nodes[i][0], nodes[i][1]][j]);
        Self {
            coef: v.try_inverse().expect("degenerate element").transpose(),
        }
    }

    fn values(&self, x: [f64; 2]) -> [f64; 3] {
        let m = self.coef * Vector3::new(1.0, x[0], x[1]);
        [m[0], m[1], m[2]]
    }

    fn grads(&self) -> [[f64; 2]; 3] {
        std::array::from_fn(|k| [self.coef[(k, 1)], self.coef[(k, 2)]])
    }
}

fn area(p: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs()
}

/// Sides of the unit square containing `x`: 0: x = 0, 1: x = 1, 2: y = 1, 3: y = 0.
fn sides(x: [f64; 2]) -> Vec<usize> {
    let tol = 1e-12;
    let mut out = Vec::new();
    if x[0].abs() < tol {
        out.push(0);
    }
    if (x[0] - 1.0).abs() < tol {
        out.push(1);
    }
    if (x[1] - 1.0).abs() < tol {
        out.push(2);
    }
    if x[1].abs() < tol {
        out.push(3);
    }
    out
}

const NORMALS: [[f64; 2]; 4] = [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];

/// Component `c` is Dirichlet on side `s`: `u1` on x = 0 and y = 1, `u2` on
/// x = 1 and y = 0.
fn clamped(side: usize, c: usize) -> bool {
    matches!((side, c), (0, 0) | (2, 0) | (1, 1) | (3, 1))
}

pub struct StepData<'a> {
    pub u_frozen: &'a [f64],
    pub eta_prev: &'a [f64],
    pub t: f64,
    pub dt: f64,
    pub theta: f64,
}

/// Dense step matrix and right-hand side after Dirichlet elimination.
#[allow(clippy::too_many_arguments)]
pub fn dense_system(
    mesh: &Mesh,
    dofmap: &DofMap,
    law: LawKind,
    c: &Coefficients,
    flow: FlowBoundary,
    problem: &dyn ProblemData,
    step: &StepData<'_>,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = dofmap.size();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let nodes = dofmap.p2_nodes(mesh);
    let rule = triangle_rule(5).unwrap();
    let (dt, theta, t) = (step.dt, step.theta, step.t);

    for (e, tri) in mesh.triangles.iter().enumerate() {
        let scalar = dofmap.element_p2[e];
        let p2_nodes: [[f64; 2]; 6] = scalar.map(|s| nodes[s]);
        let verts: [[f64; 2]; 3] = tri.map(|v| mesh.vertices[v]);
        let q2 = QuadraticBasis::new(&p2_nodes);
        let q1 = LinearBasis::new(&verts);
        let g1 = q1.grads();
        let jac = 2.0 * area(&verts);
        let udof = |comp: usize, k: usize| dofmap.u(comp, scalar[k]);
        let xi = |k: usize| dofmap.xi(tri[k]);
        let eta = |k: usize| dofmap.eta(tri[k]);

        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                bary[0] * verts[0][0] + bary[1] * verts[1][0] + bary[2] * verts[2][0],
                bary[0] * verts[0][1] + bary[1] * verts[1][1] + bary[2] * verts[2][1],
            ];
            let w = w * jac;
            let phi = q2.values(x);
            let g = q2.grads(x);
            let psi = q1.values(x);
            let mut grad_u = [[0.0; 2]; 2];
            for comp in 0..2 {
                for k in 0..6 {
                    for d in 0..2 {
                        grad_u[comp][d] += step.u_frozen[udof(comp, k)] * g[k][d];
                    }
                }
            }
            let (shear, dil) = frozen(law, c, grad_u);

            // (shear ε(u) + dil div u I, ε(v)) for v = φ_i e_ci, u = φ_j e_cj
            for ci in 0..2 {
                for i in 0..6 {
                    for cj in 0..2 {
                        for j in 0..6 {
                            let mut eps_v = [[0.0; 2]; 2];
                            let mut eps_u = [[0.0; 2]; 2];
                            for d in 0..2 {
                                eps_v[ci][d] += 0.5 * g[i][d];
                                eps_v[d][ci] += 0.5 * g[i][d];
                                eps_u[cj][d] += 0.5 * g[j][d];
                                eps_u[d][cj] += 0.5 * g[j][d];
                            }
                            let contraction: f64 = (0..2).flat_map(|r| (0..2).map(move |s| (r, s))).map(|(r, s)| eps_u[r][s] * eps_v[r][s]).sum();
                            let val = shear * contraction + dil * g[j][cj] * g[i][ci];
                            a[(udof(ci, i), udof(cj, j))] += w * val;
                        }
                    }
                    for k in 0..3 {
                        a[(udof(ci, i), xi(k))] -= w * psi[k] * g[i][ci];
                        a[(xi(k), udof(ci, i))] += w * psi[k] * g[i][ci];
                    }
                }
            }
            let f = problem.body_force(x, t);
            for comp in 0..2 {
                for i in 0..6 {
                    b[udof(comp, i)] += w * f[comp] * phi[i];
                }
            }
            let eta_prev: f64 = (0..3).map(|k| step.eta_prev[tri[k]] * psi[k]).sum();
            let src = problem.source(x, t);
            for j in 0..3 {
                for k in 0..3 {
                    let m = w * psi[j] * psi[k];
                    a[(xi(j), xi(k))] += c.kappa3 * m;
                    a[(xi(j), eta(k))] -= theta * c.kappa1 * m;
                    a[(eta(j), eta(k))] += m / dt;
                }
                b[xi(j)] += (1.0 - theta) * c.kappa1 * w * eta_prev * psi[j];
                b[eta(j)] += w * (eta_prev / dt + src) * psi[j];
            }
        }
        let ar = area(&verts);
        for j in 0..3 {
            for k in 0..3 {
                let s = ar * c.mobility * (g1[j][0] * g1[k][0] + g1[j][1] * g1[k][1]);
                a[(eta(j), xi(k))] += c.kappa1 * s;
                a[(eta(j), eta(k))] += c.kappa2 * s;
            }
            b[eta(j)] += ar * c.mobility * (c.gravity[0] * g1[j][0] + c.gravity[1] * g1[j][1]);
        }

        // boundary edges of this triangle
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let (pa, pb) = (verts[i], verts[j]);
            let common: Vec<usize> = sides(pa).into_iter().filter(|s| sides(pb).contains(s)).collect();
            let Some(&side) = common.first() else { continue };
            let normal = NORMALS[side];
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            for (s, w) in gauss_legendre_3() {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let phi = q2.values(x);
                let psi = q1.values(x);
                let f1 = problem.traction(x, t, normal);
                for comp in 0..2 {
                    if !clamped(side, comp) {
                        for k in 0..6 {
                            b[udof(comp, k)] += w * len * f1[comp] * phi[k];
                        }
                    }
                }
                if flow == FlowBoundary::NeumannFlux {
                    let flux = problem.flux(x, t, normal);
                    for k in 0..3 {
                        b[eta(k)] -= w * len * flux * psi[k];
                    }
                }
            }
        }
    }

    // Dirichlet data
    let mut known: Vec<Option<f64>> = vec![None; n];
    for (s, &x) in nodes.iter().enumerate() {
        for side in sides(x) {
            for comp in 0..2 {
                if clamped(side, comp) {
                    known[dofmap.u(comp, s)] = Some(problem.displacement(x, t)[comp]);
                }
            }
        }
    }
    if flow == FlowBoundary::DirichletXiEta {
        for (v, &x) in mesh.vertices.iter().enumerate() {
            if !sides(x).is_empty() {
                let (xi, eta) = problem.xi_eta(x, t);
                known[dofmap.xi(v)] = Some(xi);
                known[dofmap.eta(v)] = Some(eta);
            }
        }
    }
    for col in 0..n {
        if let Some(g) = known[col] {
            for row in 0..n {
                if known[row].is_none() {
                    b[row] -= a[(row, col)] * g;
                }
            }
        }
    }
    for d in 0..n {
        if let Some(g) = known[d] {
            a.row_mut(d).fill(0.0);
            a.column_mut(d).fill(0.0);
            a[(d, d)] = 1.0;
            b[d] = g;
        }
    }
    (a, b)
}

/// Relative `H¹`-seminorm of a vector P2 field, by the same brute force.
fn h1_seminorm(mesh: &Mesh, dofmap: &DofMap, u: &[f64]) -> f64 {
    let nodes = dofmap.p2_nodes(mesh);
    let rule = triangle_rule(5).unwrap();
    let mut s = 0.0;
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let scalar = dofmap.element_p2[e];
        let q2 = QuadraticBasis::new(&scalar.map(|k| nodes[k]));
        let verts: [[f64; 2]; 3] = tri.map(|v| mesh.vertices[v]);
        let jac = 2.0 * area(&verts);
        for (bary, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                bary[0] * verts[0][0] + bary[1] * verts[1][0] + bary[2] * verts[2][0],
                bary[0] * verts[0][1] + bary[1] * verts[1][1] + bary[2] * verts[2][1],
            ];
            let g = q2.grads(x);
            for comp in 0..2 {
                let mut grad = [0.0; 2];
                for k in 0..6 {
                    grad[0] += u[dofmap.u(comp, scalar[k])] * g[k][0];
                    grad[1] += u[dofmap.u(comp, scalar[k])] * g[k][1];
                }
                s += w * jac * (grad[0] * grad[0] + grad[1] * grad[1]);
            }
        }
    }
    s.sqrt()
}

pub struct DenseStep {
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
}

/// Plain Picard iteration with dense LU solves, from `u_prev`.
#[allow(clippy::too_many_arguments)]
pub fn dense_step(
    mesh: &Mesh,
    dofmap: &DofMap,
    law: LawKind,
    c: &Coefficients,
    flow: FlowBoundary,
    problem: &dyn ProblemData,
    u_prev: &[f64],
    eta_prev: &[f64],
    t: f64,
    dt: f64,
    theta: f64,
    tol: f64,
) -> DenseStep {
    let nu = dofmap.n_u();
    let nv = dofmap.n_vertices;
    let mut u = u_prev.to_vec();
    for _ in 0..200 {
        let step = StepData { u_frozen: &u, eta_prev, t, dt, theta };
        let (a, b) = dense_system(mesh, dofmap, law, c, flow, problem, &step);
        let x = a.lu().solve(&b).expect("singular dense system");
        let next: Vec<f64> = x.as_slice()[..nu].to_vec();
        let delta: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let rel = h1_seminorm(mesh, dofmap, &delta) / h1_seminorm(mesh, dofmap, &next).max(f64::MIN_POSITIVE);
        u = next;
        if rel <= tol {
            let xi = x.as_slice()[nu..nu + nv].to_vec();
            let eta = x.as_slice()[nu + nv..].to_vec();
            let eta_level = if theta == 1.0 { &eta } else { eta_prev };
            let p = xi.iter().zip(eta_level).map(|(a, b)| c.kappa1 * a + c.kappa2 * b).collect();
            return DenseStep { u, xi, eta, p };
        }
    }
    panic!("dense Picard iteration did not converge");
}
