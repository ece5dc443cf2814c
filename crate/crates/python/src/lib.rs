//! Python bindings: parameters, constitutive laws, meshes, manufactured cases,
//! single runs and convergence studies.

use std::collections::HashMap;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use poromfem::analysis::{ConvergenceReport, ErrorNorms};
use poromfem::assembly::FlowBoundary;
use poromfem::cli;
use poromfem::config::{CaseName, DtSpec, RunConfig};
use poromfem::constitutive::{self, ConstitutiveLaw, LawKind, SymMat2};
use poromfem::dofmap::build_dof_map;
use poromfem::export::{csv_string, vtk_string};
use poromfem::manufactured::{CaseKind, ManufacturedCase};
use poromfem::params::PhysicalParams;
use poromfem::error::Error;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        4 => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T> {
    s.parse().map_err(|_| PyValueError::new_err(format!("unknown {what} `{s}`")))
}

fn strain(e: (f64, f64, f64)) -> SymMat2 {
    SymMat2::new(e.0, e.1, e.2)
}

fn tuple(s: SymMat2) -> (f64, f64, f64) {
    (s.e11, s.e22, s.e12)
}

/// Physical parameters; attribute names follow the JSON config keys.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: PhysicalParams,
}

#[pymethods]
impl PyParams {
    #[staticmethod]
    fn test1() -> Self {
        Self { inner: PhysicalParams::test1() }
    }

    #[staticmethod]
    fn test2() -> Self {
        Self { inner: PhysicalParams::test2() }
    }

    #[getter(E)]
    fn young(&self) -> f64 {
        self.inner.young
    }
    #[setter(E)]
    fn set_young(&mut self, v: f64) {
        self.inner.young = v;
    }
    #[getter]
    fn nu(&self) -> f64 {
        self.inner.poisson
    }
    #[setter]
    fn set_nu(&mut self, v: f64) {
        self.inner.poisson = v;
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[setter]
    fn set_alpha(&mut self, v: f64) {
        self.inner.alpha = v;
    }
    #[getter]
    fn c0(&self) -> f64 {
        self.inner.c0
    }
    #[setter]
    fn set_c0(&mut self, v: f64) {
        self.inner.c0 = v;
    }
    #[getter(K)]
    fn permeability(&self) -> f64 {
        self.inner.permeability
    }
    #[setter(K)]
    fn set_permeability(&mut self, v: f64) {
        self.inner.permeability = v;
    }
    #[getter]
    fn mu_f(&self) -> f64 {
        self.inner.mu_f
    }
    #[setter]
    fn set_mu_f(&mut self, v: f64) {
        self.inner.mu_f = v;
    }

    /// `lambda`, `mu`, `kappa1`, `kappa2`, `kappa3`.
    fn derived(&self) -> PyResult<HashMap<&'static str, f64>> {
        let c = self.inner.derived().map_err(py_err)?;
        Ok(HashMap::from([
            ("lambda", c.lambda),
            ("mu", c.mu),
            ("kappa1", c.kappa1),
            ("kappa2", c.kappa2),
            ("kappa3", c.kappa3),
        ]))
    }

    /// `(p, div u) -> (xi, eta)`
    fn to_xi_eta(&self, p: f64, div_u: f64) -> PyResult<(f64, f64)> {
        Ok(self.inner.derived().map_err(py_err)?.to_xi_eta(p, div_u))
    }

    /// `(xi, eta) -> (p, q)`
    #[allow(clippy::wrong_self_convention)]
    fn from_xi_eta(&self, xi: f64, eta: f64) -> PyResult<(f64, f64)> {
        Ok(self.inner.derived().map_err(py_err)?.from_xi_eta(xi, eta))
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(E={}, nu={}, alpha={}, c0={}, K={}, mu_f={})",
            p.young, p.poisson, p.alpha, p.c0, p.permeability, p.mu_f
        )
    }
}

#[pyfunction]
fn derive_kappas(lam: f64, alpha: f64, c0: f64) -> PyResult<(f64, f64, f64)> {
    poromfem::params::derive_kappas(lam, alpha, c0).map_err(py_err)
}

/// `dev_scalar((e11, e22, e12))`
#[pyfunction]
fn dev_scalar(eps: (f64, f64, f64)) -> f64 {
    constitutive::dev_scalar(&strain(eps))
}

/// Constitutive law `linear`, `test1` or `test2`; strains and stresses are
/// `(e11, e22, e12)` tuples.
#[pyclass(name = "Law")]
struct PyLaw {
    inner: ConstitutiveLaw,
}

#[pymethods]
impl PyLaw {
    #[new]
    fn new(kind: &str, lam: f64, mu: f64) -> PyResult<Self> {
        let kind: LawKind = parse("law", kind)?;
        Ok(Self {
            inner: ConstitutiveLaw::new(kind, lam, mu),
        })
    }

    fn stress(&self, eps: (f64, f64, f64)) -> (f64, f64, f64) {
        tuple(self.inner.stress(&strain(eps)))
    }

    fn n_tensor(&self, eps: (f64, f64, f64)) -> (f64, f64, f64) {
        tuple(self.inner.n_tensor(&strain(eps)))
    }

    fn stored_energy(&self, eps: (f64, f64, f64)) -> f64 {
        self.inner.stored_energy(&strain(eps))
    }

    /// `(mu_tilde, lambda_tilde)` at `rho = dev_scalar(eps)`.
    fn lame_tilde(&self, rho: f64) -> (f64, f64) {
        self.inner.lame_tilde(rho)
    }
}

/// Structured `n × n` triangulation of the unit square.
#[pyclass(name = "Mesh")]
struct PyMesh {
    inner: poromfem::mesh::Mesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: poromfem::mesh::build_structured_mesh(n).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 2]> {
        self.inner.vertices.clone()
    }

    #[getter]
    fn triangles(&self) -> Vec<[usize; 3]> {
        self.inner.triangles.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.triangles.len()
    }
}

/// Manufactured solution `test1` or `test2` with its own parameter set.
#[pyclass(name = "Case")]
struct PyCase {
    inner: ManufacturedCase,
}

#[pymethods]
impl PyCase {
    #[new]
    #[pyo3(signature = (name, params = None))]
    fn new(name: &str, params: Option<PyParams>) -> PyResult<Self> {
        let kind = match name {
            "test1" => CaseKind::Test1,
            "test2" => CaseKind::Test2,
            other => return Err(PyValueError::new_err(format!("unknown case `{other}` (expected test1 or test2)"))),
        };
        let inner = match params {
            Some(p) => ManufacturedCase::with_params(kind, p.inner),
            None => ManufacturedCase::new(kind),
        }
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn params(&self) -> PyParams {
        PyParams { inner: self.inner.params }
    }

    /// Exact `u`, `p`, `div_u`, `xi`, `eta` at `(x, y, t)`.
    fn exact<'py>(&self, py: Python<'py>, x: f64, y: f64, t: f64) -> PyResult<Bound<'py, PyDict>> {
        let f = self.inner.exact_fields([x, y], t);
        let d = PyDict::new(py);
        d.set_item("u", (f.u[0], f.u[1]))?;
        d.set_item("p", f.p)?;
        d.set_item("div_u", f.div_u)?;
        d.set_item("xi", f.xi)?;
        d.set_item("eta", f.eta)?;
        Ok(d)
    }
}

fn norms(e: &ErrorNorms) -> HashMap<&'static str, f64> {
    HashMap::from([("u_l2", e.u_l2), ("u_h1", e.u_h1), ("p_l2", e.p_l2), ("p_h1", e.p_h1)])
}

/// Terminal fields of a run, sampled at the mesh vertices.
#[pyclass(name = "Solution")]
struct PySolution {
    outcome: cli::SolveOutcome,
    mesh: poromfem::mesh::Mesh,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn n(&self) -> usize {
        self.outcome.n
    }

    #[getter]
    fn t(&self) -> f64 {
        self.outcome.state.t
    }

    #[getter]
    fn u1(&self) -> Vec<f64> {
        let dofmap = build_dof_map(&self.mesh);
        self.outcome.state.u_component(&dofmap, 0)[..dofmap.n_vertices].to_vec()
    }

    #[getter]
    fn u2(&self) -> Vec<f64> {
        let dofmap = build_dof_map(&self.mesh);
        self.outcome.state.u_component(&dofmap, 1)[..dofmap.n_vertices].to_vec()
    }

    #[getter]
    fn p(&self) -> Vec<f64> {
        self.outcome.state.p.clone()
    }

    #[getter]
    fn xi(&self) -> Vec<f64> {
        self.outcome.state.xi.clone()
    }

    #[getter]
    fn eta(&self) -> Vec<f64> {
        self.outcome.state.eta.clone()
    }

    /// `None` for the zero case.
    #[getter]
    fn errors(&self) -> Option<HashMap<&'static str, f64>> {
        self.outcome.errors.as_ref().map(norms)
    }

    #[getter]
    fn picard_iterations(&self) -> Vec<usize> {
        self.outcome.diagnostics.iter().map(|d| d.picard_iterations).collect()
    }

    fn diagnostics_csv(&self) -> String {
        cli::diagnostics_csv(&self.outcome.diagnostics)
    }

    fn to_csv(&self) -> PyResult<String> {
        csv_string(&self.mesh, &build_dof_map(&self.mesh), &self.outcome.state).map_err(py_err)
    }

    fn to_vtk(&self) -> PyResult<String> {
        vtk_string(&self.mesh, &build_dof_map(&self.mesh), &self.outcome.state).map_err(py_err)
    }
}

#[pyclass(name = "Report")]
struct PyReport {
    inner: ConvergenceReport,
}

#[pymethods]
impl PyReport {
    /// One dict per row: `n`, `dt`, `errors` (or `None`), `orders`, `failure`.
    #[getter]
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("n", r.n)?;
                d.set_item("dt", r.dt)?;
                d.set_item("errors", r.errors.as_ref().map(norms))?;
                d.set_item("orders", r.orders.to_vec())?;
                d.set_item("failure", r.failure.clone())?;
                Ok(d)
            })
            .collect()
    }

    /// Orders of the last row for `[u L2, u H1, p L2, p H1]`.
    fn finest_orders(&self) -> Vec<Option<f64>> {
        self.inner.finest_orders().to_vec()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_markdown(&self) -> String {
        self.inner.to_markdown()
    }
}

fn dt_spec(dt: Option<&Bound<'_, PyAny>>) -> PyResult<DtSpec> {
    let Some(dt) = dt else {
        return Ok(DtSpec::default());
    };
    if let Ok(s) = dt.extract::<String>() {
        return s.parse().map_err(py_err);
    }
    if let Ok(v) = dt.extract::<f64>() {
        return Ok(DtSpec::Fixed(v));
    }
    Ok(DtSpec::List(dt.extract::<Vec<f64>>()?))
}

#[allow(clippy::too_many_arguments)]
fn config(
    case: &str,
    levels: Vec<usize>,
    dt: Option<&Bound<'_, PyAny>>,
    t_end: f64,
    theta: f64,
    boundary: &str,
    picard_tol: Option<f64>,
    deterministic: bool,
) -> PyResult<RunConfig> {
    let mut cfg = RunConfig {
        case: case.parse::<CaseName>().map_err(py_err)?,
        levels,
        dt: dt_spec(dt)?,
        t_end,
        theta,
        boundary: boundary.parse::<FlowBoundary>().map_err(PyValueError::new_err)?,
        deterministic,
        ..Default::default()
    };
    if let Some(tol) = picard_tol {
        cfg.picard.tol = tol;
    }
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

fn run_solve(cfg: &RunConfig) -> PyResult<PySolution> {
    let outcome = cli::solve(cfg).map_err(py_err)?;
    let mesh = poromfem::mesh::build_structured_mesh(outcome.n).map_err(py_err)?;
    Ok(PySolution { outcome, mesh })
}

/// March one mesh. `dt` is `"h2"` (default), a step, or a string such as `"1/16"`.
#[pyfunction]
#[pyo3(signature = (case = "test1", n = 4, dt = None, t_end = 1.0, theta = 1.0, boundary = "dirichlet-xi-eta", picard_tol = None, deterministic = false))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    case: &str,
    n: usize,
    dt: Option<&Bound<'_, PyAny>>,
    t_end: f64,
    theta: f64,
    boundary: &str,
    picard_tol: Option<f64>,
    deterministic: bool,
) -> PyResult<PySolution> {
    let cfg = config(case, vec![n], dt, t_end, theta, boundary, picard_tol, deterministic)?;
    py.detach(|| run_solve(&cfg))
}

/// `solve` driven by a JSON run configuration.
#[pyfunction]
fn solve_json(py: Python<'_>, text: &str) -> PyResult<PySolution> {
    let cfg = RunConfig::from_json(text).map_err(py_err)?;
    py.detach(|| run_solve(&cfg))
}

/// Spatial study over `levels`, or a temporal study on one level when `dt` is a list.
#[pyfunction]
#[pyo3(signature = (case = "test1", levels = vec![4, 8], dt = None, t_end = 1.0, theta = 1.0, boundary = "dirichlet-xi-eta", picard_tol = None, deterministic = false))]
#[allow(clippy::too_many_arguments)]
fn convergence(
    py: Python<'_>,
    case: &str,
    levels: Vec<usize>,
    dt: Option<&Bound<'_, PyAny>>,
    t_end: f64,
    theta: f64,
    boundary: &str,
    picard_tol: Option<f64>,
    deterministic: bool,
) -> PyResult<PyReport> {
    let cfg = config(case, levels, dt, t_end, theta, boundary, picard_tol, deterministic)?;
    let inner = py.detach(|| cli::convergence(&cfg)).map_err(py_err)?;
    Ok(PyReport { inner })
}

#[pymodule]
fn poromfem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyLaw>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyCase>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(derive_kappas, m)?)?;
    m.add_function(wrap_pyfunction!(dev_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_json, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    Ok(())
}
