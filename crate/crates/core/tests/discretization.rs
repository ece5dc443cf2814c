use nalgebra::DMatrix;
use poromfem::analysis::{error_norms, error_norms_with, run_case, ExactSample};
use poromfem::assembly::{Assembler, BoundaryData, DisplacementCondition, FlowBoundary, StepInputs};
use poromfem::dofmap::build_dof_map;
use poromfem::manufactured::{CaseKind, ManufacturedCase};
use poromfem::mesh::{build_structured_mesh, BoundaryTag};
use poromfem::solver::{time_march, FieldState, Simulation, SolverConfig};

fn dense(m: &poromfem::sparse::CsrMatrix) -> DMatrix<f64> {
    let rows = m.to_dense();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| rows[i][j])
}

/// Smallest nonzero `β` with `Bᵀ A⁻¹ B q = β² M q`, `A` the vector P2
/// Laplacian on interior nodes and `M` the P1 mass matrix.
fn inf_sup_constant(n: usize) -> f64 {
    let mesh = build_structured_mesh(n).unwrap();
    let dofmap = build_dof_map(&mesh);
    let case = ManufacturedCase::new(CaseKind::Test1).unwrap();
    let assembler = Assembler::new(&mesh, &dofmap, case.law, &case.params, BoundaryData::clamped(FlowBoundary::NeumannFlux)).unwrap();
    let inputs = StepInputs {
        u_frozen: &vec![0.0; dofmap.n_u()],
        eta_prev: &vec![0.0; dofmap.n_vertices],
        t_next: 1.0,
        dt: 1.0,
        theta: 1.0,
    };
    let (nu, nv) = (dofmap.n_u(), dofmap.n_vertices);
    let system = assembler.step_system(&inputs, &case).unwrap();
    let coupling = dense(&system.matrix.block(0..nu, nu..nu + nv));
    // the eliminated system has zero coupling rows on the boundary
    let laplacian = dense(&poromfem::solver::p2_laplacian(&assembler).unwrap());
    let interior: Vec<usize> = (0..dofmap.n_p2).filter(|&s| !dofmap.is_boundary_dof(dofmap.u(0, s))).collect();
    let free: Vec<usize> = (0..2).flat_map(|c| interior.iter().map(move |&s| (c, s))).map(|(c, s)| dofmap.u(c, s)).collect();
    let ni = interior.len();
    let a = DMatrix::from_fn(2 * ni, 2 * ni, |i, j| if i / ni == j / ni { laplacian[(interior[i % ni], interior[j % ni])] } else { 0.0 });
    let b = DMatrix::from_fn(2 * ni, nv, |i, j| coupling[(free[i], j)]);

    let mut mass = DMatrix::<f64>::zeros(nv, nv);
    for (e, ev) in assembler.element_values().iter().enumerate() {
        let verts = mesh.triangles[e];
        for q in &ev.points {
            for j in 0..3 {
                for k in 0..3 {
                    mass[(verts[j], verts[k])] += q.weight * q.p1[j] * q.p1[k];
                }
            }
        }
    }
    let schur = b.transpose() * a.cholesky().unwrap().solve(&b);
    let l = mass.cholesky().unwrap().l();
    let l_inv = l.clone().try_inverse().unwrap();
    let reduced: DMatrix<f64> = &l_inv * schur * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let mut eig: Vec<f64> = reduced.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    // constants are the kernel: ∫ div v = 0 for clamped v
    assert!(eig[0].abs() < 1e-10, "kernel eigenvalue {}", eig[0]);
    eig[1].sqrt()
}

#[test]
fn coupling_block_is_inf_sup_stable() {
    let betas: Vec<f64> = [2, 4, 8].into_iter().map(inf_sup_constant).collect();
    for &b in &betas {
        assert!(b > 0.1, "inf-sup constants {betas:?}");
    }
    let (lo, hi) = betas.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &b| (lo.min(b), hi.max(b)));
    assert!(lo / hi > 0.5, "inf-sup constants drift with n: {betas:?}");
}

fn interpolated(case: &ManufacturedCase, mesh: &poromfem::mesh::Mesh, dofmap: &poromfem::dofmap::DofMap, t: f64) -> FieldState {
    let mut s = FieldState::zeros(dofmap, t);
    for (k, &x) in dofmap.p2_nodes(mesh).iter().enumerate() {
        let f = case.exact_fields(x, t);
        s.u[dofmap.u(0, k)] = f.u[0];
        s.u[dofmap.u(1, k)] = f.u[1];
    }
    for (v, &x) in mesh.vertices.iter().enumerate() {
        let f = case.exact_fields(x, t);
        s.xi[v] = f.xi;
        s.eta[v] = f.eta;
        s.p[v] = f.p;
    }
    s
}

/// Residual of the interpolated exact solution in the step system at
/// `t = 1/2 + h²` with `dt = h²`, every boundary clamped.
fn patch_residual(kind: CaseKind, n: usize) -> f64 {
    let mesh = build_structured_mesh(n).unwrap();
    let dofmap = build_dof_map(&mesh);
    let case = ManufacturedCase::new(kind).unwrap();
    let assembler = Assembler::new(&mesh, &dofmap, case.law, &case.params, BoundaryData::clamped(FlowBoundary::DirichletXiEta)).unwrap();
    let dt = mesh.h() * mesh.h();
    let prev = interpolated(&case, &mesh, &dofmap, 0.5);
    let next = interpolated(&case, &mesh, &dofmap, 0.5 + dt);
    let inputs = StepInputs {
        u_frozen: &next.u,
        eta_prev: &prev.eta,
        t_next: next.t,
        dt,
        theta: 1.0,
    };
    let system = assembler.step_system(&inputs, &case).unwrap();
    let x: Vec<f64> = next.u.iter().chain(&next.xi).chain(&next.eta).copied().collect();
    let ax = system.matrix.mul_vec(&x);
    ax.iter().zip(&system.rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn interpolant_residual_shrinks_under_refinement() {
    for kind in [CaseKind::Test1, CaseKind::Test2] {
        let (coarse, fine) = (patch_residual(kind, 2), patch_residual(kind, 4));
        assert!(coarse >= 2.0 * fine, "{kind:?}: residual {coarse:e} at n = 2, {fine:e} at n = 4");
    }
}

#[test]
fn pressure_identity_at_every_step() {
    let mesh = build_structured_mesh(4).unwrap();
    let dofmap = build_dof_map(&mesh);
    for kind in [CaseKind::Test1, CaseKind::Test2] {
        let case = ManufacturedCase::new(kind).unwrap();
        let config = SolverConfig {
            dt: 0.125,
            t_end: 1.0,
            ..Default::default()
        };
        let mut sim = Simulation::new(&mesh, &dofmap, case.law, &case.params, BoundaryData::component_split(FlowBoundary::DirichletXiEta), &case, config).unwrap();
        let c = *sim.coeffs();
        let mut steps = 0;
        sim.run(|_, state| {
            steps += 1;
            let scale = state.p.iter().fold(0.0f64, |m, p| m.max(p.abs())).max(f64::MIN_POSITIVE);
            for v in 0..state.p.len() {
                let recovered = c.kappa1 * state.xi[v] + c.kappa2 * state.eta[v];
                assert!((state.p[v] - recovered).abs() <= 1e-13 * scale, "{kind:?} step {steps} vertex {v}");
            }
        })
        .unwrap();
        assert_eq!(steps, 8);
    }
}

/// `|u_θ=0 − u_θ=1|_H1` at `t = 1/4` on the `n = 4` mesh.
fn theta_gap(dt: f64) -> f64 {
    let mesh = build_structured_mesh(4).unwrap();
    let dofmap = build_dof_map(&mesh);
    let case = ManufacturedCase::new(CaseKind::Test1).unwrap();
    let run = |theta: f64| {
        let config = SolverConfig {
            theta,
            dt,
            t_end: 0.25,
            picard_tol: 1e-12,
            ..Default::default()
        };
        time_march(&mesh, &dofmap, case.law, &case.params, BoundaryData::component_split(FlowBoundary::DirichletXiEta), &case, config)
            .unwrap()
            .state
    };
    let (decoupled, coupled) = (run(0.0), run(1.0));
    let exact = |_: [f64; 2]| ExactSample {
        u: [0.0; 2],
        grad_u: [[0.0; 2]; 2],
        p: 0.0,
        grad_p: [0.0; 2],
    };
    let mut diff = decoupled.clone();
    diff.u.iter_mut().zip(&coupled.u).for_each(|(a, b)| *a -= b);
    diff.p.iter_mut().zip(&coupled.p).for_each(|(a, b)| *a -= b);
    error_norms_with(&mesh, &dofmap, &diff, 7, exact).unwrap().u_h1
}

#[test]
fn theta_gap_is_first_order_in_dt() {
    let gaps: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0].into_iter().map(theta_gap).collect();
    for w in gaps.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.5..=2.5).contains(&ratio), "θ-gaps {gaps:?}");
    }
}

#[test]
fn sequential_runs_are_bitwise_identical() {
    let case = ManufacturedCase::new(CaseKind::Test1).unwrap();
    let config = SolverConfig {
        dt: 1.0 / 16.0,
        t_end: 0.5,
        deterministic: true,
        ..Default::default()
    };
    let a = run_case(&case, 4, FlowBoundary::DirichletXiEta, config).unwrap();
    let b = run_case(&case, 4, FlowBoundary::DirichletXiEta, config).unwrap();
    let bits = |s: &FieldState| -> Vec<u64> { s.u.iter().chain(&s.xi).chain(&s.eta).chain(&s.p).map(|v| v.to_bits()).collect() };
    assert_eq!(bits(&a.state), bits(&b.state));
    assert_eq!(a.errors, b.errors);
}

#[test]
fn error_quadrature_does_not_pollute() {
    let case = ManufacturedCase::new(CaseKind::Test1).unwrap();
    let config = SolverConfig {
        dt: 1.0 / 64.0,
        t_end: 1.0,
        ..Default::default()
    };
    let run = run_case(&case, 8, FlowBoundary::DirichletXiEta, config).unwrap();
    let mesh = build_structured_mesh(8).unwrap();
    let dofmap = build_dof_map(&mesh);
    let seven = error_norms(&run.state, &case, &mesh, &dofmap).unwrap();
    let nine = error_norms_with(&mesh, &dofmap, &run.state, 9, |x| {
        let f = case.exact_fields(x, run.state.t);
        ExactSample {
            u: f.u,
            grad_u: f.grad_u,
            p: f.p,
            grad_p: f.grad_p,
        }
    })
    .unwrap();
    for (a, b) in seven.as_array().into_iter().zip(nine.as_array()) {
        assert!((a - b).abs() < 1e-3 * b, "degree 7 {seven:?} vs degree 9 {nine:?}");
    }
}

#[test]
fn boundary_clauses_cover_every_side() {
    use DisplacementCondition::{Dirichlet, Traction};
    let b = BoundaryData::component_split(FlowBoundary::DirichletXiEta);
    let expected = [
        (BoundaryTag::Gamma1, [Dirichlet, Traction]),
        (BoundaryTag::Gamma2, [Traction, Dirichlet]),
        (BoundaryTag::Gamma3, [Dirichlet, Traction]),
        (BoundaryTag::Gamma4, [Traction, Dirichlet]),
    ];
    for (tag, conds) in expected {
        for (c, cond) in conds.into_iter().enumerate() {
            assert_eq!(b.condition(tag, c), cond, "{tag} component {}", c + 1);
        }
    }

    // every boundary flow dof is pinned, and only the Dirichlet displacement components
    let mesh = build_structured_mesh(3).unwrap();
    let dofmap = build_dof_map(&mesh);
    let case = ManufacturedCase::new(CaseKind::Test2).unwrap();
    let pinned: std::collections::BTreeSet<usize> = b.dirichlet_values(&mesh, &dofmap, &case, 0.5).into_iter().map(|(d, _)| d).collect();
    for tag in BoundaryTag::ALL {
        for &v in dofmap.boundary_p1(tag) {
            assert!(pinned.contains(&dofmap.xi(v)) && pinned.contains(&dofmap.eta(v)));
        }
        for c in 0..2 {
            if b.condition(tag, c) == Dirichlet {
                assert!(dofmap.boundary_p2(tag).iter().all(|&s| pinned.contains(&dofmap.u(c, s))));
            }
        }
    }
    let neumann = BoundaryData::component_split(FlowBoundary::NeumannFlux);
    assert!(neumann.dirichlet_values(&mesh, &dofmap, &case, 0.5).iter().all(|&(d, _)| d < dofmap.n_u()));
}
