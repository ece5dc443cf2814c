//! Error norms, convergence orders and report tables.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{BoundaryData, FlowBoundary};
use crate::basis::tabulate;
use crate::dofmap::{build_dof_map, DofMap};
use crate::error::{Error, Result};
use crate::manufactured::ManufacturedCase;
use crate::mesh::{build_structured_mesh, Mesh};
use crate::params::PhysicalParams;
use crate::solver::{FieldState, SolverConfig, StepDiagnostics, Simulation};

/// Quadrature degree of the error integrals.
pub const ERROR_QUADRATURE: usize = 7;

/// Errors at one time level. H¹ values are full norms (L² part included).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorNorms {
    pub u_l2: f64,
    pub u_h1: f64,
    pub p_l2: f64,
    pub p_h1: f64,
}

impl ErrorNorms {
    pub fn as_array(&self) -> [f64; 4] {
        [self.u_l2, self.u_h1, self.p_l2, self.p_h1]
    }
}

/// Exact values needed by the error integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSample {
    pub u: [f64; 2],
    pub grad_u: [[f64; 2]; 2],
    pub p: f64,
    pub grad_p: [f64; 2],
}

/// Errors of `state` against `exact` using a quadrature rule of `degree`.
pub fn error_norms_with(
    mesh: &Mesh,
    dofmap: &DofMap,
    state: &FieldState,
    degree: usize,
    exact: impl Fn([f64; 2]) -> ExactSample,
) -> Result<ErrorNorms> {
    if state.u.len() != dofmap.n_u() || state.p.len() != dofmap.n_vertices {
        return Err(Error::Dimension("state does not match the dof map".into()));
    }
    let tab = tabulate(mesh, degree)?;
    let (mut ul2, mut uh1, mut pl2, mut ph1) = (0.0, 0.0, 0.0, 0.0);
    for (e, ev) in tab.iter().enumerate() {
        let s = &dofmap.element_p2[e];
        let verts = &mesh.triangles[e];
        let pv = verts.map(|v| state.p[v]);
        let mut grad_p = [0.0; 2];
        for k in 0..3 {
            grad_p[0] += pv[k] * ev.p1_grad[k][0];
            grad_p[1] += pv[k] * ev.p1_grad[k][1];
        }
        for q in &ev.points {
            let ex = exact(q.x);
            for comp in 0..2 {
                let mut u = 0.0;
                let mut g = [0.0; 2];
                for k in 0..6 {
                    let c = state.u[dofmap.u(comp, s[k])];
                    u += c * q.p2[k];
                    g[0] += c * q.p2_grad[k][0];
                    g[1] += c * q.p2_grad[k][1];
                }
                let du = ex.u[comp] - u;
                ul2 += q.weight * du * du;
                uh1 += q.weight * ((ex.grad_u[comp][0] - g[0]).powi(2) + (ex.grad_u[comp][1] - g[1]).powi(2));
            }
            let p: f64 = (0..3).map(|k| pv[k] * q.p1[k]).sum();
            let dp = ex.p - p;
            pl2 += q.weight * dp * dp;
            ph1 += q.weight * ((ex.grad_p[0] - grad_p[0]).powi(2) + (ex.grad_p[1] - grad_p[1]).powi(2));
        }
    }
    Ok(ErrorNorms {
        u_l2: ul2.sqrt(),
        u_h1: (ul2 + uh1).sqrt(),
        p_l2: pl2.sqrt(),
        p_h1: (pl2 + ph1).sqrt(),
    })
}

/// Errors against a manufactured case at `state.t`.
pub fn error_norms(state: &FieldState, case: &ManufacturedCase, mesh: &Mesh, dofmap: &DofMap) -> Result<ErrorNorms> {
    error_norms_with(mesh, dofmap, state, ERROR_QUADRATURE, |x| {
        let f = case.exact_fields(x, state.t);
        ExactSample {
            u: f.u,
            grad_u: f.grad_u,
            p: f.p,
            grad_p: f.grad_p,
        }
    })
}

/// `log(R(h) / R(h/2)) / log 2`
pub fn spatial_order(err_coarse: f64, err_fine: f64) -> Result<f64> {
    if !(err_coarse > 0.0) || !(err_fine > 0.0) {
        return Err(Error::OrderUndefined(format!(
            "errors must be positive (got {err_coarse:e}, {err_fine:e})"
        )));
    }
    Ok((err_coarse / err_fine).ln() / std::f64::consts::LN_2)
}

/// `|R(Δt) − R(Δt/2)| / |R(Δt/2) − R(Δt/4)|`; about 2 for first order in time.
pub fn temporal_order_t(err_dt: f64, err_dt2: f64, err_dt4: f64) -> Result<f64> {
    let den = (err_dt2 - err_dt4).abs();
    if !(den > 0.0) {
        return Err(Error::OrderUndefined("successive errors are equal".into()));
    }
    Ok((err_dt - err_dt2).abs() / den)
}

/// Time step per refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DtRule {
    /// `dt = h²`
    HSquared,
    Fixed(f64),
}

impl DtRule {
    pub fn dt(self, n: usize) -> f64 {
        match self {
            DtRule::HSquared => 1.0 / (n * n) as f64,
            DtRule::Fixed(dt) => dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub dt: f64,
    /// `None` when the run for this row failed.
    pub errors: Option<ErrorNorms>,
    /// Orders for `[u L², u H¹, p L², p H¹]`.
    pub orders: [Option<f64>; 4],
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub kind: StudyKind,
    pub case: String,
    pub law: String,
    pub theta: f64,
    pub boundary: String,
    pub t_end: f64,
    pub params: PhysicalParams,
    /// Wall-clock stamp for the Markdown header; left out of the CSV.
    pub generated: Option<String>,
    pub rows: Vec<ReportRow>,
}

const COLUMNS: [&str; 4] = ["u_L2", "u_H1", "p_L2", "p_H1"];
const UNDEFINED: &str = "—";

/// C-style `%.6e`: six mantissa decimals and an exponent of at least two digits.
pub fn format_sci(v: f64) -> String {
    let s = format!("{v:.6e}");
    match s.split_once('e') {
        Some((mant, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mant}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

fn format_order(o: Option<f64>) -> String {
    o.map_or_else(|| UNDEFINED.to_string(), |v| format!("{v:.4}"))
}

fn fraction_label(x: f64) -> String {
    let inv = 1.0 / x;
    if (inv - inv.round()).abs() < 1e-9 {
        format!("1/{}", inv.round() as u64)
    } else {
        format!("{x}")
    }
}

impl ConvergenceReport {
    /// Fills the order columns from the errors.
    fn compute_orders(&mut self) {
        match self.kind {
            StudyKind::Spatial => {
                for i in 1..self.rows.len() {
                    let (a, b) = (self.rows[i - 1].errors, self.rows[i].errors);
                    if let (Some(a), Some(b)) = (a, b) {
                        let (a, b) = (a.as_array(), b.as_array());
                        self.rows[i].orders = [0, 1, 2, 3].map(|k| spatial_order(a[k], b[k]).ok());
                    }
                }
            }
            StudyKind::Temporal => {
                for i in 2..self.rows.len() {
                    let e = [i - 2, i - 1, i].map(|j| self.rows[j].errors);
                    if let [Some(a), Some(b), Some(c)] = e {
                        let (a, b, c) = (a.as_array(), b.as_array(), c.as_array());
                        self.rows[i].orders = [0, 1, 2, 3].map(|k| temporal_order_t(a[k], b[k], c[k]).ok());
                    }
                }
            }
        }
    }

    pub fn finest_orders(&self) -> [Option<f64>; 4] {
        self.rows.last().map_or([None; 4], |r| r.orders)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.failure.is_some())
    }

    pub fn to_csv(&self) -> String {
        let lead = match self.kind {
            StudyKind::Spatial => "h",
            StudyKind::Temporal => "dt",
        };
        let mut out = String::from(lead);
        for c in COLUMNS {
            write!(out, ",{c},{c}_order").unwrap();
        }
        out.push('\n');
        for r in &self.rows {
            let lead = match self.kind {
                StudyKind::Spatial => 1.0 / r.n as f64,
                StudyKind::Temporal => r.dt,
            };
            out.push_str(&format_sci(lead));
            match &r.errors {
                Some(e) => {
                    for (v, o) in e.as_array().iter().zip(r.orders) {
                        write!(out, ",{},{}", format_sci(*v), format_order(o)).unwrap();
                    }
                }
                None => {
                    for _ in COLUMNS {
                        out.push_str(",failed,");
                        out.push_str(UNDEFINED);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let title = match self.kind {
            StudyKind::Spatial => "Spatial errors and convergence orders",
            StudyKind::Temporal => "Time errors and convergence orders",
        };
        writeln!(
            out,
            "### {title}\n\ncase `{}`, law `{}`, θ = {}, boundary `{}`, T = {}\n",
            self.case, self.law, self.theta, self.boundary, self.t_end
        )
        .unwrap();
        let p = &self.params;
        writeln!(
            out,
            "E = {}, ν = {}, α = {}, c0 = {}, K = {}, μ_f = {}, ρ_f g = ({}, {})\n",
            p.young, p.poisson, p.alpha, p.c0, p.permeability, p.mu_f, p.rho_f_g[0], p.rho_f_g[1]
        )
        .unwrap();
        if let Some(stamp) = &self.generated {
            writeln!(out, "generated {stamp}\n").unwrap();
        }
        let (lead, order) = match self.kind {
            StudyKind::Spatial => ("h", "order"),
            StudyKind::Temporal => ("Δt", "order_T"),
        };
        writeln!(
            out,
            "| {lead} | ‖u−u_h‖_L2 | {order} | ‖u−u_h‖_H1 | {order} | ‖p−p_h‖_L2 | {order} | ‖p−p_h‖_H1 | {order} |"
        )
        .unwrap();
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let lead = match self.kind {
                StudyKind::Spatial => format!("1/{}", r.n),
                StudyKind::Temporal => fraction_label(r.dt),
            };
            out.push_str(&format!("| {lead} |"));
            match &r.errors {
                Some(e) => {
                    for (v, o) in e.as_array().iter().zip(r.orders) {
                        write!(out, " {} | {} |", format_sci(*v), format_order(o)).unwrap();
                    }
                }
                None => {
                    for _ in COLUMNS {
                        write!(out, " failed | {UNDEFINED} |").unwrap();
                    }
                }
            }
            out.push('\n');
        }
        for r in self.failures() {
            writeln!(out, "\nn = {} failed: {}", r.n, r.failure.as_deref().unwrap_or("")).unwrap();
        }
        out
    }
}

/// Outcome of a single manufactured run.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub state: FieldState,
    pub errors: ErrorNorms,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// Solves `case` on an `n × n` mesh and measures the terminal errors.
pub fn run_case(case: &ManufacturedCase, n: usize, flow: FlowBoundary, config: SolverConfig) -> Result<CaseRun> {
    let mesh = build_structured_mesh(n)?;
    let dofmap = build_dof_map(&mesh);
    let mut sim = Simulation::new(
        &mesh,
        &dofmap,
        case.law,
        &case.params,
        BoundaryData::component_split(flow),
        case,
        config,
    )?;
    let mut diagnostics = Vec::new();
    let state = sim.run(|d, _| diagnostics.push(*d))?;
    let errors = error_norms(&state, case, &mesh, &dofmap)?;
    Ok(CaseRun {
        state,
        errors,
        diagnostics,
    })
}

fn report(case: &ManufacturedCase, kind: StudyKind, flow: FlowBoundary, base: &SolverConfig, rows: Vec<ReportRow>) -> ConvergenceReport {
    let mut r = ConvergenceReport {
        kind,
        case: case.kind.name().into(),
        law: case.law.kind.name().into(),
        theta: base.theta,
        boundary: flow.name().into(),
        t_end: base.t_end,
        params: case.params,
        generated: None,
        rows,
    };
    r.compute_orders();
    r
}

fn run_rows(
    case: &ManufacturedCase,
    flow: FlowBoundary,
    jobs: Vec<(usize, SolverConfig)>,
    parallel: bool,
) -> Vec<ReportRow> {
    let run = |&(n, cfg): &(usize, SolverConfig)| {
        let outcome = run_case(case, n, flow, cfg);
        match outcome {
            Ok(r) => ReportRow {
                n,
                dt: cfg.dt,
                errors: Some(r.errors),
                orders: [None; 4],
                failure: None,
            },
            Err(e) => {
                let e = Error::Level { n, source: Box::new(e) };
                log::error!("{e}");
                ReportRow {
                    n,
                    dt: cfg.dt,
                    errors: None,
                    orders: [None; 4],
                    failure: Some(e.to_string()),
                }
            }
        }
    };
    if parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    }
}

/// Spatial study over `levels` (subdivisions per side, each twice the last).
/// Failed levels are kept as marked rows.
pub fn convergence_study(
    case: &ManufacturedCase,
    levels: &[usize],
    dt_rule: DtRule,
    flow: FlowBoundary,
    base: SolverConfig,
) -> Result<ConvergenceReport> {
    if levels.is_empty() {
        return Err(Error::config("levels", "at least one level is required"));
    }
    if levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::config("levels", "each level must double the previous one"));
    }
    let jobs: Vec<_> = levels
        .iter()
        .map(|&n| {
            let cfg = SolverConfig { dt: dt_rule.dt(n), ..base };
            cfg.validate(1.0 / n as f64).map(|_| (n, cfg))
        })
        .collect::<Result<_>>()?;
    let rows = run_rows(case, flow, jobs, !base.deterministic);
    Ok(report(case, StudyKind::Spatial, flow, &base, rows))
}

/// Temporal study on a fixed `n × n` mesh over the given time steps (each
/// half the last).
pub fn temporal_study(
    case: &ManufacturedCase,
    n: usize,
    dts: &[f64],
    flow: FlowBoundary,
    base: SolverConfig,
) -> Result<ConvergenceReport> {
    if dts.is_empty() {
        return Err(Error::config("dt", "at least one time step is required"));
    }
    if dts.windows(2).any(|w| (w[1] * 2.0 - w[0]).abs() > 1e-12 * w[0]) {
        return Err(Error::config("dt", "each time step must halve the previous one"));
    }
    let jobs: Vec<_> = dts
        .iter()
        .map(|&dt| {
            let cfg = SolverConfig { dt, ..base };
            cfg.validate(1.0 / n as f64).map(|_| (n, cfg))
        })
        .collect::<Result<_>>()?;
    let rows = run_rows(case, flow, jobs, !base.deterministic);
    Ok(report(case, StudyKind::Temporal, flow, &base, rows))
}
