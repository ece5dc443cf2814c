//! Monolithic system for one Picard step of the fully discrete scheme.
//!
//! With `N_lin` frozen at `u*` (`N_lin(ε) = μ̃ ε + (λ̃ − 1/λ) tr(ε) I`) and
//! `θ ∈ {0, 1}`, one step solves
//!
//! ```text
//! (N_lin(ε u), ε v) − (ξ, div v)                 = (f, v) + ⟨f1, v⟩
//! κ3 (ξ, φ) + (div u, φ) − θ κ1 (η, φ)            = (1 − θ) κ1 (η_prev, φ)
//! (η, ψ)/dt + m (∇(κ1 ξ + κ2 η), ∇ψ)             = (η_prev, ψ)/dt + (φ_src, ψ)
//!                                                   − ⟨φ1, ψ⟩ + m (ρf g, ∇ψ)
//! ```
//!
//! with `m = K/μf` and `φ1 = −m (∇p − ρf g)·n` the outward Darcy flux.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{tabulate, ElementValues};
use crate::constitutive::{ConstitutiveLaw, SymMat2};
use crate::dofmap::DofMap;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::params::{DerivedCoeffs, PhysicalParams};
use crate::quadrature::gauss_legendre_3;
use crate::sparse::{CsrMatrix, Pattern};

/// Volume quadrature degree.
pub const VOLUME_QUADRATURE: usize = 5;

/// Forcing, boundary values and initial data of a problem.
pub trait ProblemData: Sync {
    fn body_force(&self, x: [f64; 2], t: f64) -> [f64; 2];
    fn source(&self, x: [f64; 2], t: f64) -> f64;
    /// `f1 = σ n − α p n` on the boundary.
    fn traction(&self, x: [f64; 2], t: f64, normal: [f64; 2]) -> [f64; 2];
    /// Outward Darcy flux `−(K/μf)(∇p − ρf g)·n`.
    fn flux(&self, x: [f64; 2], t: f64, normal: [f64; 2]) -> f64;
    /// Dirichlet displacement.
    fn displacement(&self, x: [f64; 2], t: f64) -> [f64; 2];
    /// Dirichlet values of `(ξ, η)`.
    fn xi_eta(&self, x: [f64; 2], t: f64) -> (f64, f64);
    fn initial_displacement(&self, x: [f64; 2]) -> [f64; 2];
    fn initial_pressure(&self, x: [f64; 2]) -> f64;
    /// `div u0`
    fn initial_divergence(&self, x: [f64; 2]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplacementCondition {
    Dirichlet,
    Traction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowBoundary {
    /// `ξ` and `η` prescribed at every boundary vertex.
    #[default]
    DirichletXiEta,
    /// The Darcy flux `φ1` prescribed on every edge.
    NeumannFlux,
}

impl FlowBoundary {
    pub fn name(self) -> &'static str {
        match self {
            FlowBoundary::DirichletXiEta => "dirichlet-xi-eta",
            FlowBoundary::NeumannFlux => "neumann-flux",
        }
    }
}

impl std::str::FromStr for FlowBoundary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dirichlet-xi-eta" => Ok(FlowBoundary::DirichletXiEta),
            "neumann-flux" => Ok(FlowBoundary::NeumannFlux),
            other => Err(format!(
                "unknown boundary strategy `{other}` (expected dirichlet-xi-eta or neumann-flux)"
            )),
        }
    }
}

/// Boundary condition of each displacement component on each side, plus the
/// flow strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryData {
    /// Indexed by `[tag.index()][component]`.
    pub displacement: [[DisplacementCondition; 2]; 4],
    pub flow: FlowBoundary,
}

impl BoundaryData {
    /// `u1` fixed on Γ1 and Γ3, `u2` fixed on Γ2 and Γ4, the other component
    /// loaded by the traction.
    pub fn component_split(flow: FlowBoundary) -> Self {
        use DisplacementCondition::{Dirichlet as D, Traction as T};
        Self {
            displacement: [[D, T], [T, D], [D, T], [T, D]],
            flow,
        }
    }

    pub fn clamped(flow: FlowBoundary) -> Self {
        Self {
            displacement: [[DisplacementCondition::Dirichlet; 2]; 4],
            flow,
        }
    }

    pub fn condition(&self, tag: BoundaryTag, component: usize) -> DisplacementCondition {
        self.displacement[tag.index()][component]
    }

    /// Constrained dofs and their values at time `t`, sorted by dof.
    pub fn dirichlet_values(
        &self,
        mesh: &Mesh,
        dofmap: &DofMap,
        problem: &dyn ProblemData,
        t: f64,
    ) -> Vec<(usize, f64)> {
        let nodes = dofmap.p2_nodes(mesh);
        let mut out = Vec::new();
        for tag in BoundaryTag::ALL {
            for c in 0..2 {
                if self.condition(tag, c) == DisplacementCondition::Dirichlet {
                    for &s in dofmap.boundary_p2(tag) {
                        out.push((dofmap.u(c, s), problem.displacement(nodes[s], t)[c]));
                    }
                }
            }
            if self.flow == FlowBoundary::DirichletXiEta {
                for &v in dofmap.boundary_p1(tag) {
                    let (xi, eta) = problem.xi_eta(mesh.vertices[v], t);
                    out.push((dofmap.xi(v), xi));
                    out.push((dofmap.eta(v), eta));
                }
            }
        }
        out.sort_by_key(|&(d, _)| d);
        out.dedup_by_key(|&mut (d, _)| d);
        out
    }
}

#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Constrained dofs and prescribed values, sorted by dof.
    pub dirichlet: Vec<(usize, f64)>,
}

/// Time-level inputs of one step.
#[derive(Debug, Clone, Copy)]
pub struct StepInputs<'a> {
    /// Displacement at which `N` is linearized (length `dofmap.n_u()`).
    pub u_frozen: &'a [f64],
    /// `η` of the previous time level.
    pub eta_prev: &'a [f64],
    pub t_next: f64,
    pub dt: f64,
    pub theta: f64,
}

/// Frozen-independent part of a step system.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLoads {
    /// Load vector before Dirichlet elimination.
    pub rhs: Vec<f64>,
    /// Sorted `(dof, value)` pairs.
    pub dirichlet: Vec<(usize, f64)>,
}

const LOCAL: usize = 18;
const XI: usize = 12;
const ETA: usize = 15;

#[derive(Clone, Copy, PartialEq, Eq)]
enum LocalBlock {
    U,
    Xi,
    Eta,
}

fn local_block(i: usize) -> LocalBlock {
    match i {
        0..=11 => LocalBlock::U,
        12..=14 => LocalBlock::Xi,
        _ => LocalBlock::Eta,
    }
}

/// Local `(row, col)` pairs that can be nonzero; `u` never couples to `η`.
fn local_couplings() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..LOCAL {
        for j in 0..LOCAL {
            let pair = (local_block(i), local_block(j));
            if !matches!(pair, (LocalBlock::U, LocalBlock::Eta) | (LocalBlock::Eta, LocalBlock::U)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Step-system assembler for a fixed mesh, law and coefficient set. The
/// sparsity pattern and basis tabulation are computed once.
pub struct Assembler<'a> {
    pub mesh: &'a Mesh,
    pub dofmap: &'a DofMap,
    pub law: ConstitutiveLaw,
    pub coeffs: DerivedCoeffs,
    pub mobility: f64,
    pub gravity: [f64; 2],
    pub boundary: BoundaryData,
    /// Element-parallel local matrices (the global merge is always ordered).
    pub parallel: bool,
    tab: Vec<ElementValues>,
    couplings: Vec<(usize, usize)>,
    pattern: Pattern,
    /// `slots[e * couplings.len() + k]` receives coupling `k` of element `e`.
    slots: Vec<usize>,
}

impl<'a> Assembler<'a> {
    pub fn new(
        mesh: &'a Mesh,
        dofmap: &'a DofMap,
        law: ConstitutiveLaw,
        params: &PhysicalParams,
        boundary: BoundaryData,
    ) -> Result<Self> {
        let coeffs = params.derived()?;
        if dofmap.n_vertices != mesh.vertices.len() || dofmap.element_p2.len() != mesh.triangles.len() {
            return Err(Error::Dimension("dof map was built for a different mesh".into()));
        }
        let tab = tabulate(mesh, VOLUME_QUADRATURE)?;
        let couplings = local_couplings();
        let n = dofmap.size();
        let mut positions = Vec::with_capacity(mesh.triangles.len() * couplings.len() + n);
        for e in 0..mesh.triangles.len() {
            let dofs = dofmap.element_dofs(mesh, e);
            positions.extend(couplings.iter().map(|&(i, j)| (dofs[i], dofs[j])));
        }
        // every diagonal entry is stored so Dirichlet rows can become identity rows
        positions.extend((0..n).map(|i| (i, i)));
        let (pattern, mut slots) = Pattern::build(n, n, &positions)?;
        slots.truncate(mesh.triangles.len() * couplings.len());
        Ok(Self {
            mesh,
            dofmap,
            law,
            coeffs,
            mobility: params.mobility(),
            gravity: params.rho_f_g,
            boundary,
            parallel: true,
            tab,
            couplings,
            pattern,
            slots,
        })
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn element_values(&self) -> &[ElementValues] {
        &self.tab
    }

    fn check(&self, inputs: &StepInputs<'_>) -> Result<()> {
        if inputs.theta != 0.0 && inputs.theta != 1.0 {
            return Err(Error::TimeStep(format!("theta must be 0 or 1 (got {})", inputs.theta)));
        }
        if !(inputs.dt > 0.0) || !inputs.dt.is_finite() {
            return Err(Error::TimeStep(format!("dt must be positive (got {})", inputs.dt)));
        }
        if inputs.u_frozen.len() != self.dofmap.n_u() {
            return Err(Error::Dimension(format!(
                "frozen displacement has {} entries, expected {}",
                inputs.u_frozen.len(),
                self.dofmap.n_u()
            )));
        }
        if inputs.eta_prev.len() != self.dofmap.n_vertices {
            return Err(Error::Dimension(format!(
                "previous eta has {} entries, expected {}",
                inputs.eta_prev.len(),
                self.dofmap.n_vertices
            )));
        }
        Ok(())
    }

    fn local_matrix(&self, e: usize, inputs: &StepInputs<'_>) -> [[f64; LOCAL]; LOCAL] {
        let ev = &self.tab[e];
        let s = &self.dofmap.element_p2[e];
        let c = &self.coeffs;
        let (dt, theta, m) = (inputs.dt, inputs.theta, self.mobility);
        let u_loc: [[f64; 6]; 2] = [0, 1].map(|comp| s.map(|d| inputs.u_frozen[self.dofmap.u(comp, d)]));

        let mut a = [[0.0; LOCAL]; LOCAL];
        let g1 = &ev.p1_grad;

        for q in &ev.points {
            let w = q.weight;
            let g = &q.p2_grad;
            let mut grad_u = [[0.0; 2]; 2];
            for comp in 0..2 {
                for k in 0..6 {
                    grad_u[comp][0] += u_loc[comp][k] * g[k][0];
                    grad_u[comp][1] += u_loc[comp][k] * g[k][1];
                }
            }
            let frozen = self.law.frozen_coefficients(&SymMat2::sym_grad(grad_u));
            let (shear, dil) = (frozen.shear, frozen.dilatation);

            for ci in 0..2 {
                for ai in 0..6 {
                    let row = ci * 6 + ai;
                    for cj in 0..2 {
                        for bj in 0..6 {
                            let dot = if ci == cj { g[ai][0] * g[bj][0] + g[ai][1] * g[bj][1] } else { 0.0 };
                            let val = shear * 0.5 * (dot + g[bj][ci] * g[ai][cj]) + dil * g[ai][ci] * g[bj][cj];
                            a[row][cj * 6 + bj] += w * val;
                        }
                    }
                    for k in 0..3 {
                        let v = w * q.p1[k] * g[ai][ci];
                        a[row][XI + k] -= v;
                        a[XI + k][row] += v;
                    }
                }
            }

            for j in 0..3 {
                for k in 0..3 {
                    let mass = w * q.p1[j] * q.p1[k];
                    a[XI + j][XI + k] += c.kappa3 * mass;
                    a[XI + j][ETA + k] -= theta * c.kappa1 * mass;
                    a[ETA + j][ETA + k] += mass / dt;
                }
            }
        }

        // P1 gradients are constant: the diffusion term is exact.
        let area = ev.geometry.det.abs() * 0.5;
        for j in 0..3 {
            for k in 0..3 {
                let stiff = area * m * (g1[j][0] * g1[k][0] + g1[j][1] * g1[k][1]);
                a[ETA + j][XI + k] += c.kappa1 * stiff;
                a[ETA + j][ETA + k] += c.kappa2 * stiff;
            }
        }
        a
    }

    fn local_load(&self, e: usize, inputs: &StepInputs<'_>, problem: &dyn ProblemData) -> [f64; LOCAL] {
        let ev = &self.tab[e];
        let verts = &self.mesh.triangles[e];
        let c = &self.coeffs;
        let (dt, theta, m) = (inputs.dt, inputs.theta, self.mobility);
        let eta_prev = verts.map(|v| inputs.eta_prev[v]);
        let mut b = [0.0; LOCAL];
        for q in &ev.points {
            let w = q.weight;
            let f = problem.body_force(q.x, inputs.t_next);
            for ai in 0..6 {
                b[ai] += w * f[0] * q.p2[ai];
                b[6 + ai] += w * f[1] * q.p2[ai];
            }
            let src = problem.source(q.x, inputs.t_next);
            let eta_q: f64 = (0..3).map(|k| eta_prev[k] * q.p1[k]).sum();
            for j in 0..3 {
                b[XI + j] += (1.0 - theta) * c.kappa1 * w * eta_q * q.p1[j];
                b[ETA + j] += w * (eta_q / dt + src) * q.p1[j];
            }
        }
        let area = ev.geometry.det.abs() * 0.5;
        for j in 0..3 {
            b[ETA + j] += area * m * (self.gravity[0] * ev.p1_grad[j][0] + self.gravity[1] * ev.p1_grad[j][1]);
        }
        b
    }

    fn map_elements<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        let n_el = self.mesh.triangles.len();
        if self.parallel {
            (0..n_el).into_par_iter().map(f).collect()
        } else {
            (0..n_el).map(f).collect()
        }
    }

    /// Volume matrix before Dirichlet elimination.
    fn volume_matrix(&self, inputs: &StepInputs<'_>) -> CsrMatrix {
        let locals = self.map_elements(|e| self.local_matrix(e, inputs));
        let mut matrix = CsrMatrix::zeros(self.pattern.clone());
        let nc = self.couplings.len();
        for (e, a) in locals.iter().enumerate() {
            let slots = &self.slots[e * nc..(e + 1) * nc];
            for (&(i, j), &s) in self.couplings.iter().zip(slots) {
                matrix.values[s] += a[i][j];
            }
        }
        matrix
    }

    /// Right-hand side and Dirichlet data of a step. Neither depends on the
    /// frozen displacement, so a Picard loop computes them once.
    pub fn step_loads(&self, inputs: &StepInputs<'_>, problem: &dyn ProblemData) -> Result<StepLoads> {
        self.check(inputs)?;
        let locals = self.map_elements(|e| self.local_load(e, inputs, problem));
        let mut rhs = vec![0.0; self.dofmap.size()];
        for (e, b) in locals.iter().enumerate() {
            let dofs = self.dofmap.element_dofs(self.mesh, e);
            for (i, &d) in dofs.iter().enumerate() {
                rhs[d] += b[i];
            }
        }
        let t = inputs.t_next;
        let traction = assemble_traction(
            self.mesh,
            self.dofmap,
            |x, n| problem.traction(x, t, n),
            &self.boundary,
        );
        for (r, v) in rhs.iter_mut().zip(&traction) {
            *r += v;
        }
        if self.boundary.flow == FlowBoundary::NeumannFlux {
            let flux = assemble_flux(self.mesh, self.dofmap, |x, n| problem.flux(x, t, n));
            for (r, v) in rhs.iter_mut().zip(&flux) {
                *r -= v;
            }
        }
        let dirichlet = self.boundary.dirichlet_values(self.mesh, self.dofmap, problem, t);
        Ok(StepLoads { rhs, dirichlet })
    }

    /// Step system for precomputed loads.
    pub fn system_with_loads(&self, inputs: &StepInputs<'_>, loads: &StepLoads) -> Result<SparseSystem> {
        self.check(inputs)?;
        if loads.rhs.len() != self.dofmap.size() {
            return Err(Error::Dimension("load vector does not match the dof map".into()));
        }
        let mut system = SparseSystem {
            matrix: self.volume_matrix(inputs),
            rhs: loads.rhs.clone(),
            dirichlet: Vec::new(),
        };
        apply_dirichlet(&mut system, self.dofmap, &loads.dirichlet)?;
        Ok(system)
    }

    /// Full step system with boundary terms and Dirichlet elimination.
    pub fn step_system(&self, inputs: &StepInputs<'_>, problem: &dyn ProblemData) -> Result<SparseSystem> {
        let loads = self.step_loads(inputs, problem)?;
        self.system_with_loads(inputs, &loads)
    }
}

/// One-shot assembly of the step system (builds an [`Assembler`]).
#[allow(clippy::too_many_arguments)]
pub fn assemble_step_system(
    mesh: &Mesh,
    dofmap: &DofMap,
    law: ConstitutiveLaw,
    params: &PhysicalParams,
    boundary: BoundaryData,
    inputs: &StepInputs<'_>,
    problem: &dyn ProblemData,
) -> Result<SparseSystem> {
    Assembler::new(mesh, dofmap, law, params, boundary)?.step_system(inputs, problem)
}

/// P2 trace basis on an edge, parameterized from endpoint `a` (s = 0) to `b`.
fn p2_trace(s: f64) -> [f64; 3] {
    [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
}

/// `⟨f1, v⟩` over boundary edges for the displacement components that carry a
/// traction condition on the edge's side. Returns a full-length vector.
pub fn assemble_traction(
    mesh: &Mesh,
    dofmap: &DofMap,
    f1: impl Fn([f64; 2], [f64; 2]) -> [f64; 2],
    boundary: &BoundaryData,
) -> Vec<f64> {
    let mut out = vec![0.0; dofmap.size()];
    let gauss = gauss_legendre_3();
    for be in &mesh.boundary_edges {
        let free: Vec<usize> = (0..2)
            .filter(|&c| boundary.condition(be.tag, c) == DisplacementCondition::Traction)
            .collect();
        if free.is_empty() {
            continue;
        }
        let [a, b] = mesh.edges[be.edge].vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = mesh.edge_length(be.edge);
        let scalar = [a, b, dofmap.n_vertices + be.edge];
        for &(s, w) in &gauss {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let f = f1(x, be.normal);
            let phi = p2_trace(s);
            for &c in &free {
                for k in 0..3 {
                    out[dofmap.u(c, scalar[k])] += w * len * f[c] * phi[k];
                }
            }
        }
    }
    out
}

/// `⟨φ1, ψ⟩` over all boundary edges for the `η` test functions.
pub fn assemble_flux(mesh: &Mesh, dofmap: &DofMap, phi1: impl Fn([f64; 2], [f64; 2]) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; dofmap.size()];
    for be in &mesh.boundary_edges {
        let [a, b] = mesh.edges[be.edge].vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = mesh.edge_length(be.edge);
        for (s, w) in gauss_legendre_3() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let val = w * len * phi1(x, be.normal);
            out[dofmap.eta(a)] += val * (1.0 - s);
            out[dofmap.eta(b)] += val * s;
        }
    }
    out
}

/// Symmetric Dirichlet elimination after checking that every constrained dof
/// lies on the boundary.
pub fn apply_dirichlet(system: &mut SparseSystem, dofmap: &DofMap, values: &[(usize, f64)]) -> Result<()> {
    if let Some(&(d, _)) = values.iter().find(|&&(d, _)| !dofmap.is_boundary_dof(d)) {
        return Err(Error::NotBoundaryDof(d));
    }
    eliminate(&mut system.matrix, &mut system.rhs, values)?;
    let mut merged: Vec<(usize, f64)> = system.dirichlet.iter().chain(values).copied().collect();
    merged.sort_by_key(|&(d, _)| d);
    merged.dedup_by_key(|&mut (d, _)| d);
    system.dirichlet = merged;
    Ok(())
}

/// Moves known columns to the right-hand side and replaces constrained rows
/// by identity rows. Stored entries become explicit zeros so the pattern is
/// unchanged.
pub fn eliminate(matrix: &mut CsrMatrix, rhs: &mut [f64], values: &[(usize, f64)]) -> Result<()> {
    let n = matrix.nrows();
    let mut known: Vec<Option<f64>> = vec![None; n];
    for &(d, g) in values {
        if d >= n {
            return Err(Error::Dimension(format!("constrained dof {d} outside a system of size {n}")));
        }
        known[d] = Some(g);
    }
    if values.is_empty() {
        return Ok(());
    }
    let row_ptr = matrix.pattern.row_ptr.clone();
    for i in 0..n {
        let range = row_ptr[i]..row_ptr[i + 1];
        match known[i] {
            Some(g) => {
                for k in range {
                    matrix.values[k] = if matrix.pattern.col_idx[k] == i { 1.0 } else { 0.0 };
                }
                rhs[i] = g;
            }
            None => {
                for k in range {
                    if let Some(g) = known[matrix.pattern.col_idx[k]] {
                        rhs[i] -= matrix.values[k] * g;
                        matrix.values[k] = 0.0;
                    }
                }
            }
        }
    }
    for &(d, _) in values {
        if matrix.pattern.find(d, d).is_none() {
            return Err(Error::Dimension(format!("constrained dof {d} has no stored diagonal")));
        }
    }
    Ok(())
}
