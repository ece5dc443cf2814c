//! Time marching with a Picard loop per step.
//!
//! `θ = 1` solves the monolithic `(u, ξ, η)` system at every Picard
//! iteration. `θ = 0` decouples: the Picard loop runs on the `(u, ξ)` block
//! only (its `η` coupling is explicit), after which `η` is obtained from one
//! linear solve. Pressure is recovered as `p = κ1 ξ^{n+1} + κ2 η^{n+θ}`.

use std::collections::VecDeque;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::assembly::{Assembler, BoundaryData, DisplacementCondition, ProblemData, StepInputs};
use crate::constitutive::{ConstitutiveLaw, SymMat2};
use crate::dofmap::DofMap;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::params::{DerivedCoeffs, PhysicalParams};
use crate::quadrature::gauss_legendre_3;
use crate::sparse::{CsrMatrix, SparseSolver};

/// Increments below this H¹-seminorm count as converged.
pub const PICARD_ABS_FLOOR: f64 = 1e-14;
/// Consecutive growing increments that abort the Picard loop.
const GROWTH_LIMIT: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    /// `[u1 | u2]` P2 coefficients.
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
}

impl FieldState {
    pub fn zeros(dofmap: &DofMap, t: f64) -> Self {
        Self {
            t,
            u: vec![0.0; dofmap.n_u()],
            xi: vec![0.0; dofmap.n_vertices],
            eta: vec![0.0; dofmap.n_vertices],
            p: vec![0.0; dofmap.n_vertices],
        }
    }

    pub fn u_component(&self, dofmap: &DofMap, component: usize) -> &[f64] {
        &self.u[component * dofmap.n_p2..(component + 1) * dofmap.n_p2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// 1 for the coupled scheme, 0 for the decoupled one.
    pub theta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// History length of Anderson mixing on the Picard map; 0 gives plain
    /// Picard.
    #[serde(default = "default_anderson_depth")]
    pub anderson_depth: usize,
    /// Precondition refinement with an earlier factorization instead of
    /// factoring every Picard matrix.
    #[serde(default = "default_reuse")]
    pub reuse_factorization: bool,
    /// Start each step's Picard loop from the linear extrapolation of the two
    /// previous levels rather than from the previous level.
    #[serde(default = "default_reuse")]
    pub extrapolate: bool,
    /// Constant `C` of the decoupled-scheme proviso `dt ≤ C h²`.
    pub c_stab: f64,
    pub allow_unstable_dt: bool,
    /// Sequential element loops.
    pub deterministic: bool,
}

pub const DEFAULT_ANDERSON_DEPTH: usize = 5;

fn default_anderson_depth() -> usize {
    DEFAULT_ANDERSON_DEPTH
}

fn default_reuse() -> bool {
    true
}

fn linear_solver(config: &SolverConfig) -> SparseSolver {
    let mut solver = SparseSolver::new();
    solver.reuse_factorization = config.reuse_factorization;
    solver
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: 1.0,
            dt: 1.0 / 16.0,
            t_end: 1.0,
            picard_tol: 1e-9,
            picard_max: 50,
            anderson_depth: DEFAULT_ANDERSON_DEPTH,
            reuse_factorization: true,
            extrapolate: true,
            c_stab: 1.0,
            allow_unstable_dt: false,
            deterministic: false,
        }
    }
}

impl SolverConfig {
    /// Number of steps `t_end / dt`, which must be an integer.
    pub fn step_count(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::TimeStep(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::TimeStep(format!("t_end must be positive (got {})", self.t_end)));
        }
        let q = self.t_end / self.dt;
        let n = q.round();
        if n < 1.0 || (q - n).abs() > 4.0 * f64::EPSILON * n {
            return Err(Error::TimeStep(format!(
                "t_end / dt = {q} is not an integer number of steps"
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self, h: f64) -> Result<()> {
        if self.theta != 0.0 && self.theta != 1.0 {
            return Err(Error::TimeStep(format!("theta must be 0 or 1 (got {})", self.theta)));
        }
        self.step_count()?;
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(Error::TimeStep("picard_tol must be positive and picard_max at least 1".into()));
        }
        if self.theta == 0.0 && !self.allow_unstable_dt {
            let limit = self.c_stab * h * h;
            if self.dt > limit * (1.0 + 1e-12) {
                return Err(Error::StabilityProviso { dt: self.dt, limit });
            }
        }
        Ok(())
    }
}

/// Nodal interpolation of the initial data, with `ξ⁰ = αp⁰ − q⁰/λ` and
/// `η⁰ = c0 p⁰ + α q⁰` for `q⁰ = div u⁰`.
pub fn initial_state(
    mesh: &Mesh,
    dofmap: &DofMap,
    coeffs: &DerivedCoeffs,
    u0: impl Fn([f64; 2]) -> [f64; 2],
    p0: impl Fn([f64; 2]) -> f64,
    div_u0: impl Fn([f64; 2]) -> f64,
) -> FieldState {
    let mut state = FieldState::zeros(dofmap, 0.0);
    for (s, x) in dofmap.p2_nodes(mesh).into_iter().enumerate() {
        let u = u0(x);
        state.u[dofmap.u(0, s)] = u[0];
        state.u[dofmap.u(1, s)] = u[1];
    }
    for (v, &x) in mesh.vertices.iter().enumerate() {
        let p = p0(x);
        let (xi, eta) = coeffs.to_xi_eta(p, div_u0(x));
        state.xi[v] = xi;
        state.eta[v] = eta;
        state.p[v] = p;
    }
    state
}

/// `p = κ1 ξ + κ2 η` nodally.
pub fn recover_pressure(xi: &[f64], eta: &[f64], coeffs: &DerivedCoeffs) -> Result<Vec<f64>> {
    if xi.len() != eta.len() {
        return Err(Error::Dimension(format!(
            "xi has {} entries but eta has {}",
            xi.len(),
            eta.len()
        )));
    }
    Ok(xi
        .iter()
        .zip(eta)
        .map(|(x, e)| coeffs.kappa1 * x + coeffs.kappa2 * e)
        .collect())
}

/// Scalar P2 stiffness matrix `(∇φa, ∇φb)`.
pub fn p2_laplacian(assembler: &Assembler<'_>) -> Result<CsrMatrix> {
    let dm = assembler.dofmap;
    let mut triplets = Vec::with_capacity(36 * dm.element_p2.len());
    for (e, ev) in assembler.element_values().iter().enumerate() {
        let s = &dm.element_p2[e];
        let mut k = [[0.0; 6]; 6];
        for q in &ev.points {
            for a in 0..6 {
                for b in 0..6 {
                    let g = &q.p2_grad;
                    k[a][b] += q.weight * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
        }
        for a in 0..6 {
            for b in 0..6 {
                triplets.push((s[a], s[b], k[a][b]));
            }
        }
    }
    CsrMatrix::from_triplets(dm.n_p2, dm.n_p2, &triplets)
}

/// Parts of the discrete energy `J_h`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Energy {
    /// `(N(ε u), ε u) + (κ3/2)‖ξ‖² + (κ2/2)‖η‖²`
    pub stored: f64,
    /// `(f, u) + ⟨f1, u⟩`
    pub work: f64,
}

impl Energy {
    /// `J_h = stored − work`
    pub fn total(&self) -> f64 {
        self.stored - self.work
    }
}

/// Discrete energy of a state, with the forcing evaluated at `state.t`.
pub fn discrete_energy(assembler: &Assembler<'_>, problem: &dyn ProblemData, state: &FieldState) -> Energy {
    let (mesh, dm) = (assembler.mesh, assembler.dofmap);
    let c = &assembler.coeffs;
    let t = state.t;
    let mut stored = 0.0;
    let mut work = 0.0;
    for (e, ev) in assembler.element_values().iter().enumerate() {
        let s = &dm.element_p2[e];
        let verts = &mesh.triangles[e];
        for q in &ev.points {
            let mut grad_u = [[0.0; 2]; 2];
            let mut u = [0.0; 2];
            for comp in 0..2 {
                for k in 0..6 {
                    let coef = state.u[dm.u(comp, s[k])];
                    u[comp] += coef * q.p2[k];
                    grad_u[comp][0] += coef * q.p2_grad[k][0];
                    grad_u[comp][1] += coef * q.p2_grad[k][1];
                }
            }
            let eps = SymMat2::sym_grad(grad_u);
            let xi: f64 = (0..3).map(|k| state.xi[verts[k]] * q.p1[k]).sum();
            let eta: f64 = (0..3).map(|k| state.eta[verts[k]] * q.p1[k]).sum();
            stored += q.weight
                * (assembler.law.n_tensor(&eps).ddot(&eps)
                    + 0.5 * c.kappa3 * xi * xi
                    + 0.5 * c.kappa2 * eta * eta);
            let f = problem.body_force(q.x, t);
            work += q.weight * (f[0] * u[0] + f[1] * u[1]);
        }
    }
    for be in &mesh.boundary_edges {
        let [a, b] = mesh.edges[be.edge].vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = mesh.edge_length(be.edge);
        let scalar = [a, b, dm.n_vertices + be.edge];
        for (sp, w) in gauss_legendre_3() {
            let x = [pa[0] + sp * (pb[0] - pa[0]), pa[1] + sp * (pb[1] - pa[1])];
            let phi = [(1.0 - sp) * (1.0 - 2.0 * sp), sp * (2.0 * sp - 1.0), 4.0 * sp * (1.0 - sp)];
            let f1 = problem.traction(x, t, be.normal);
            for comp in 0..2 {
                if assembler.boundary.condition(be.tag, comp) != DisplacementCondition::Traction {
                    continue;
                }
                let u: f64 = (0..3).map(|k| state.u[dm.u(comp, scalar[k])] * phi[k]).sum();
                work += w * len * f1[comp] * u;
            }
        }
    }
    Energy { stored, work }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub picard_iterations: usize,
    /// Last relative H¹-seminorm increment.
    pub increment: f64,
    pub energy: Energy,
}

/// Anderson mixing for the fixed-point map `u ↦ G(u)`.
struct AndersonMixer {
    depth: usize,
    last: Option<(Vec<f64>, Vec<f64>)>,
    residual_diffs: VecDeque<Vec<f64>>,
    image_diffs: VecDeque<Vec<f64>>,
}

impl AndersonMixer {
    /// Mixing coefficients above this magnitude restart the history.
    const COEFFICIENT_LIMIT: f64 = 1e6;

    fn new(depth: usize) -> Self {
        Self {
            depth,
            last: None,
            residual_diffs: VecDeque::new(),
            image_diffs: VecDeque::new(),
        }
    }

    /// Next iterate from the current one `x` and its image `g = G(x)`.
    fn next(&mut self, x: &[f64], g: &[f64]) -> Vec<f64> {
        if self.depth == 0 {
            return g.to_vec();
        }
        let f: Vec<f64> = g.iter().zip(x).map(|(a, b)| a - b).collect();
        if let Some((f_last, g_last)) = self.last.take() {
            self.residual_diffs.push_back(f.iter().zip(&f_last).map(|(a, b)| a - b).collect());
            self.image_diffs.push_back(g.iter().zip(&g_last).map(|(a, b)| a - b).collect());
            if self.residual_diffs.len() > self.depth {
                self.residual_diffs.pop_front();
                self.image_diffs.pop_front();
            }
        }
        self.last = Some((f.clone(), g.to_vec()));
        let m = self.residual_diffs.len();
        if m == 0 {
            return g.to_vec();
        }
        let a = Mat::from_fn(f.len(), m, |i, j| self.residual_diffs[j][i]);
        let b = Mat::from_fn(f.len(), 1, |i, _| f[i]);
        let gamma = a.col_piv_qr().solve_lstsq(&b);
        let gamma: Vec<f64> = (0..m).map(|j| gamma[(j, 0)]).collect();
        if gamma.iter().any(|c| !c.is_finite() || c.abs() > Self::COEFFICIENT_LIMIT) {
            self.residual_diffs.clear();
            self.image_diffs.clear();
            return g.to_vec();
        }
        let mut next = g.to_vec();
        for (c, dg) in gamma.iter().zip(&self.image_diffs) {
            next.iter_mut().zip(dg).for_each(|(v, d)| *v -= c * d);
        }
        next
    }
}

/// Mesh, discretization and problem bound together for time stepping.
pub struct Simulation<'a> {
    pub assembler: Assembler<'a>,
    pub problem: &'a dyn ProblemData,
    pub config: SolverConfig,
    laplacian: CsrMatrix,
    full_solver: SparseSolver,
    mech_solver: SparseSolver,
    flow_solver: SparseSolver,
}

impl<'a> Simulation<'a> {
    pub fn new(
        mesh: &'a Mesh,
        dofmap: &'a DofMap,
        law: ConstitutiveLaw,
        params: &PhysicalParams,
        boundary: BoundaryData,
        problem: &'a dyn ProblemData,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate(mesh.h())?;
        let mut assembler = Assembler::new(mesh, dofmap, law, params, boundary)?;
        assembler.parallel = !config.deterministic;
        let laplacian = p2_laplacian(&assembler)?;
        Ok(Self {
            assembler,
            problem,
            config,
            laplacian,
            full_solver: linear_solver(&config),
            mech_solver: linear_solver(&config),
            flow_solver: linear_solver(&config),
        })
    }

    pub fn dofmap(&self) -> &DofMap {
        self.assembler.dofmap
    }

    pub fn coeffs(&self) -> &DerivedCoeffs {
        &self.assembler.coeffs
    }

    pub fn initial_state(&self) -> FieldState {
        let p = self.problem;
        initial_state(
            self.assembler.mesh,
            self.assembler.dofmap,
            &self.assembler.coeffs,
            |x| p.initial_displacement(x),
            |x| p.initial_pressure(x),
            |x| p.initial_divergence(x),
        )
    }

    /// `|u|_{H¹}` of a vector P2 field.
    pub fn h1_seminorm(&self, u: &[f64]) -> f64 {
        let n = self.dofmap().n_p2;
        let mut s = 0.0;
        for comp in 0..2 {
            let v = &u[comp * n..(comp + 1) * n];
            let kv = self.laplacian.mul_vec(v);
            s += v.iter().zip(&kv).map(|(a, b)| a * b).sum::<f64>();
        }
        s.max(0.0).sqrt()
    }

    fn inputs<'b>(&self, u_frozen: &'b [f64], prev: &'b FieldState, t_next: f64) -> StepInputs<'b> {
        StepInputs {
            u_frozen,
            eta_prev: &prev.eta,
            t_next,
            dt: self.config.dt,
            theta: self.config.theta,
        }
    }

    /// Advances one time level. Returns the new state, the Picard iteration
    /// count and the final relative increment.
    pub fn picard_step(&mut self, prev: &FieldState, t_next: f64) -> Result<(FieldState, usize, f64)> {
        self.picard_step_from(prev, &prev.u, t_next)
    }

    /// [`Self::picard_step`] with the first iterate `u_start` instead of
    /// `prev.u`.
    pub fn picard_step_from(&mut self, prev: &FieldState, u_start: &[f64], t_next: f64) -> Result<(FieldState, usize, f64)> {
        let dm = self.assembler.dofmap;
        let (nu, nv) = (dm.n_u(), dm.n_vertices);
        let mech = nu + nv;
        let coupled = self.config.theta == 1.0;

        if u_start.len() != nu {
            return Err(Error::Dimension("initial Picard iterate has the wrong length".into()));
        }
        let mut u = u_start.to_vec();
        let mut xi = prev.xi.clone();
        let mut eta = prev.eta.clone();
        let mut mixer = AndersonMixer::new(self.config.anderson_depth);
        let mut last_increment = f64::INFINITY;
        let mut growing = 0;
        let mut system;
        let loads = self.assembler.step_loads(&self.inputs(&u, prev, t_next), self.problem)?;
        let mut k = 0;
        loop {
            k += 1;
            system = self.assembler.system_with_loads(&self.inputs(&u, prev, t_next), &loads)?;
            let x = if coupled {
                self.full_solver.solve(&system.matrix, &system.rhs)?
            } else {
                let a = system.matrix.block(0..mech, 0..mech);
                self.mech_solver.solve(&a, &system.rhs[..mech])?
            };
            let solved = &x[..nu];
            let delta: Vec<f64> = solved.iter().zip(&u).map(|(a, b)| a - b).collect();
            let abs = self.h1_seminorm(&delta);
            let scale = self.h1_seminorm(solved);
            let rel = if scale > 0.0 { abs / scale } else { abs };
            log::trace!("picard iteration {k}: increment {rel:e}");
            xi.copy_from_slice(&x[nu..mech]);
            if coupled {
                eta.copy_from_slice(&x[mech..]);
            }
            if abs <= PICARD_ABS_FLOOR || rel <= self.config.picard_tol {
                u.copy_from_slice(solved);
                last_increment = rel;
                break;
            }
            growing = if rel > last_increment { growing + 1 } else { 0 };
            last_increment = rel;
            if growing >= GROWTH_LIMIT || k >= self.config.picard_max {
                return Err(Error::PicardDiverged { iterations: k, increment: rel });
            }
            u = mixer.next(&u, solved);
        }

        let eta_for_pressure;
        if coupled {
            eta_for_pressure = eta.clone();
        } else {
            eta_for_pressure = prev.eta.clone();
            let n = dm.size();
            let a = system.matrix.block(mech..n, mech..n);
            let coupling = system.matrix.block(mech..n, nu..mech);
            let cx = coupling.mul_vec(&xi);
            let rhs: Vec<f64> = system.rhs[mech..].iter().zip(&cx).map(|(b, c)| b - c).collect();
            eta = self.flow_solver.solve(&a, &rhs)?;
        }
        let p = recover_pressure(&xi, &eta_for_pressure, &self.assembler.coeffs)?;
        Ok((
            FieldState {
                t: t_next,
                u,
                xi,
                eta,
                p,
            },
            k,
            last_increment,
        ))
    }

    /// Runs from the initial state to `t_end`, calling `observe` after every
    /// step.
    pub fn run(&mut self, mut observe: impl FnMut(&StepDiagnostics, &FieldState)) -> Result<FieldState> {
        let steps = self.config.step_count()?;
        let mut state = self.initial_state();
        let mut earlier: Option<(f64, Vec<f64>)> = None;
        for step in 1..=steps {
            let t_next = if step == steps { self.config.t_end } else { step as f64 * self.config.dt };
            let start = match &earlier {
                Some((t_old, u_old)) if self.config.extrapolate => {
                    let r = (t_next - state.t) / (state.t - t_old);
                    state.u.iter().zip(u_old).map(|(a, b)| a + r * (a - b)).collect()
                }
                _ => state.u.clone(),
            };
            let (next, iterations, increment) = self.picard_step_from(&state, &start, t_next).map_err(|e| Error::Step {
                step,
                t: t_next,
                source: Box::new(e),
            })?;
            let diag = StepDiagnostics {
                step,
                t: t_next,
                picard_iterations: iterations,
                increment,
                energy: discrete_energy(&self.assembler, self.problem, &next),
            };
            log::debug!(
                "step {step} t = {t_next:.6} picard = {iterations} increment = {increment:.3e}"
            );
            observe(&diag, &next);
            earlier = Some((state.t, std::mem::replace(&mut state, next).u));
        }
        Ok(state)
    }
}

/// Final state and per-step diagnostics of a run.
#[derive(Debug, Clone)]
pub struct MarchResult {
    pub state: FieldState,
    pub diagnostics: Vec<StepDiagnostics>,
}

pub fn time_march(
    mesh: &Mesh,
    dofmap: &DofMap,
    law: ConstitutiveLaw,
    params: &PhysicalParams,
    boundary: BoundaryData,
    problem: &dyn ProblemData,
    config: SolverConfig,
) -> Result<MarchResult> {
    let mut sim = Simulation::new(mesh, dofmap, law, params, boundary, problem, config)?;
    let mut diagnostics = Vec::new();
    let state = sim.run(|d, _| diagnostics.push(*d))?;
    Ok(MarchResult { state, diagnostics })
}

/// CSV header of the per-step diagnostics.
pub const DIAGNOSTICS_HEADER: &str = "step,t,picard_iters,energy,stored_energy,increment";

pub fn diagnostics_row(d: &StepDiagnostics) -> String {
    format!(
        "{},{:.6e},{},{:.6e},{:.6e},{:.6e}",
        d.step,
        d.t,
        d.picard_iterations,
        d.energy.total(),
        d.energy.stored,
        d.increment
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::FlowBoundary;
    use crate::constitutive::LawKind;
    use crate::dofmap::build_dof_map;
    use crate::manufactured::Homogeneous;
    use crate::mesh::build_structured_mesh;

    fn coeffs() -> DerivedCoeffs {
        PhysicalParams::test1().derived().unwrap()
    }

    #[test]
    fn initial_state_examples() {
        let mesh = build_structured_mesh(2).unwrap();
        let dm = build_dof_map(&mesh);
        let c = coeffs();
        let s = initial_state(&mesh, &dm, &c, |_| [0.0, 0.0], |_| 0.0, |_| 0.0);
        assert_eq!(s, FieldState::zeros(&dm, 0.0));

        let s = initial_state(&mesh, &dm, &c, |x| x, |_| 1.0, |_| 2.0);
        for v in 0..dm.n_vertices {
            assert_eq!(s.eta[v], c.c0 + 2.0 * c.alpha);
            assert_eq!(s.xi[v], c.alpha - 2.0 / c.lambda);
        }
        let s = initial_state(&mesh, &dm, &c, |_| [0.0, 0.0], |_| 1.0, |_| 0.0);
        assert!(s.xi.iter().all(|&v| v == c.alpha) && s.eta.iter().all(|&v| v == c.c0));
    }

    #[test]
    fn recover_pressure_examples() {
        let c = coeffs();
        assert_eq!(recover_pressure(&[0.0; 3], &[0.0; 3], &c).unwrap(), vec![0.0; 3]);
        let (pbar, qbar) = (0.7, -1.3);
        let (xi, eta) = c.to_xi_eta(pbar, qbar);
        let p = recover_pressure(&[xi], &[eta], &c).unwrap();
        assert!((p[0] - pbar).abs() < 1e-13);
        assert!(recover_pressure(&[0.0; 2], &[0.0; 3], &c).is_err());
    }

    #[test]
    fn step_count_examples() {
        let cfg = SolverConfig { dt: 0.25, t_end: 1.0, ..Default::default() };
        assert_eq!(cfg.step_count().unwrap(), 4);
        let cfg = SolverConfig { dt: 0.3, t_end: 1.0, ..Default::default() };
        assert!(cfg.step_count().is_err());
        let cfg = SolverConfig { dt: 1.0 / 160.0, ..Default::default() };
        assert_eq!(cfg.step_count().unwrap(), 160);
    }

    #[test]
    fn decoupled_proviso() {
        let h = 0.25;
        let cfg = SolverConfig { theta: 0.0, dt: 0.125, ..Default::default() };
        assert!(matches!(cfg.validate(h), Err(Error::StabilityProviso { .. })));
        let ok = SolverConfig { dt: 1.0 / 16.0, ..cfg };
        ok.validate(h).unwrap();
        let forced = SolverConfig { allow_unstable_dt: true, ..cfg };
        forced.validate(h).unwrap();
        let bad = SolverConfig { theta: 2.0, ..ok };
        assert!(bad.validate(h).is_err());
    }

    #[test]
    fn homogeneous_march_stays_zero() {
        let mesh = build_structured_mesh(2).unwrap();
        let dm = build_dof_map(&mesh);
        let params = PhysicalParams::test1();
        let c = params.derived().unwrap();
        for theta in [0.0, 1.0] {
            let cfg = SolverConfig { theta, dt: 0.25, t_end: 1.0, ..Default::default() };
            let law = ConstitutiveLaw::new(LawKind::Test1, c.lambda, c.mu);
            let res = time_march(&mesh, &dm, law, &params, BoundaryData::component_split(FlowBoundary::DirichletXiEta), &Homogeneous, cfg).unwrap();
            assert_eq!(res.diagnostics.len(), 4);
            assert_eq!(res.state.t, 1.0);
            assert_eq!(res.state, FieldState::zeros(&dm, 1.0));
            for d in &res.diagnostics {
                assert_eq!(d.picard_iterations, 1);
                assert_eq!(d.energy.total(), 0.0);
            }
        }
    }

    #[test]
    fn energy_of_unit_xi() {
        let mesh = build_structured_mesh(3).unwrap();
        let dm = build_dof_map(&mesh);
        let params = PhysicalParams::test1();
        let c = params.derived().unwrap();
        let law = ConstitutiveLaw::new(LawKind::Test1, c.lambda, c.mu);
        let asm = Assembler::new(&mesh, &dm, law, &params, BoundaryData::component_split(FlowBoundary::DirichletXiEta)).unwrap();
        let mut s = FieldState::zeros(&dm, 0.5);
        assert_eq!(discrete_energy(&asm, &Homogeneous, &s).total(), 0.0);
        s.xi.iter_mut().for_each(|v| *v = 1.0);
        let e = discrete_energy(&asm, &Homogeneous, &s).total();
        assert!((e - c.kappa3 / 2.0).abs() < 1e-12 * c.kappa3);
    }
}
