//! Python module `nhdfem`: run configurations, manufactured solves,
//! convergence studies, scattering sweeps, dispersion scans and mesh
//! statistics.
//!
//! Input errors raise `ValueError`, solver failures `RuntimeError`, file
//! errors `OSError`. Long runs release the GIL.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::nhdfem::driver::{
    self, exit_code, manufactured_errors, run_convergence_study, run_dispersion, run_scattering, RunConfig,
};
use ::nhdfem::linsolve::SolverMethod;
use ::nhdfem::model::{self, PhysicalParams};
use ::nhdfem::error::Error;

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match exit_code(&e) {
        2 => PyValueError::new_err(msg),
        4 => PyOSError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

/// Validated run configuration.
#[pyclass(name = "Config", module = "nhdfem", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        RunConfig::from_toml_str(text).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        RunConfig::load(&path).map(|inner| Self { inner }).map_err(py_err)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(py_err)
    }

    /// `"manufactured"`, `"scattering"` or `"dispersion"`.
    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.problem.kind).to_lowercase()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.problem.order
    }

    fn __repr__(&self) -> String {
        format!("Config(kind={:?}, order={})", self.kind(), self.order())
    }
}

fn method(solver: &str, tol: f64, restart: usize, max_iter: usize) -> PyResult<SolverMethod> {
    match solver {
        "direct" => Ok(SolverMethod::DirectLu),
        "gmres" => Ok(SolverMethod::Gmres {
            restart,
            max_iter,
            tol,
            ilu0: true,
        }),
        other => Err(PyValueError::new_err(format!("unknown solver {other:?}, expected \"direct\" or \"gmres\""))),
    }
}

/// Manufactured problem on an `n x n x n` unit-cube box mesh.
#[pyfunction]
#[pyo3(signature = (n, order = 1, solver = "direct", tol = 1e-10, restart = 50, max_iter = 5000))]
fn solve_manufactured<'py>(
    py: Python<'py>,
    n: usize,
    order: usize,
    solver: &str,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let m = method(solver, tol, restart, max_iter)?;
    let (sol, (ee, ej)) = py
        .detach(|| {
            let sol = driver::solve_manufactured(n, order, &m)?;
            let errs = manufactured_errors(&sol)?;
            Ok((sol, errs))
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("ndofs_e", sol.spaces.e.n_dofs())?;
    d.set_item("ndofs_j", sol.spaces.j.n_free_dofs())?;
    d.set_item("err_e", ee.combined)?;
    d.set_item("err_j", ej.combined)?;
    d.set_item("method", &sol.report.method)?;
    d.set_item("iterations", sol.report.iterations)?;
    d.set_item("relative_residual", sol.report.relative_residual)?;
    d.set_item("residual_e", sol.residuals.e_rel)?;
    d.set_item("residual_j", sol.residuals.j_rel)?;
    d.set_item("power_balance_defect", sol.balance.max_defect())?;
    Ok(d)
}

/// One dict per level with `h`, DOF counts, errors and observed orders.
#[pyfunction]
fn convergence_study<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config.inner.clone();
    let report = py.detach(|| run_convergence_study(&cfg, |_| {})).map_err(py_err)?;
    report
        .table
        .rows
        .iter()
        .zip(&report.levels)
        .map(|(r, l)| {
            let d = PyDict::new(py);
            d.set_item("level", r.level)?;
            d.set_item("n", l.n)?;
            d.set_item("h", r.h)?;
            d.set_item("ndofs_e", r.ndofs_e)?;
            d.set_item("ndofs_j", r.ndofs_j)?;
            d.set_item("err_e", r.err_e)?;
            d.set_item("order_e", r.order_e)?;
            d.set_item("err_j", r.err_j)?;
            d.set_item("order_j", r.order_j)?;
            d.set_item("residual", l.residuals.max_relative())?;
            Ok(d)
        })
        .collect()
}

/// Extinction spectrum; VTK snapshots go to `out_dir` when given.
#[pyfunction]
#[pyo3(signature = (config, out_dir = None))]
fn scattering<'py>(py: Python<'py>, config: &PyConfig, out_dir: Option<PathBuf>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config.inner.clone();
    let report = py
        .detach(|| run_scattering(&cfg, out_dir.as_deref(), |_| {}))
        .map_err(py_err)?;
    report
        .points
        .iter()
        .map(|p| {
            let d = PyDict::new(py);
            d.set_item("omega_over_omega_p", p.omega_over_omega_p)?;
            d.set_item("omega", p.omega)?;
            d.set_item("sigma_ext", p.sigma_ext)?;
            d.set_item("residual", p.residuals.max_relative())?;
            Ok(d)
        })
        .collect()
}

/// `(omega, k, eps)` rows; `eps` is `None` at a pole.
#[pyfunction]
fn dispersion(config: &PyConfig) -> PyResult<Vec<(f64, f64, Option<(f64, f64)>)>> {
    let rows = run_dispersion(&config.inner).map_err(py_err)?;
    Ok(rows.into_iter().map(|r| (r.omega, r.k, r.eps)).collect())
}

/// `ε(ω, k) = ε_∞ - ω_p² / (ω(ω + iγ) - β²k²)`.
#[pyfunction]
#[pyo3(signature = (omega, k, omega_p, gamma, beta, eps_inf = 1.0))]
fn permittivity(omega: f64, k: f64, omega_p: f64, gamma: f64, beta: f64, eps_inf: f64) -> PyResult<(f64, f64)> {
    let p = PhysicalParams {
        omega,
        omega_p,
        gamma,
        beta,
        eps_inf,
        ..PhysicalParams::unit()
    };
    let e = model::nonlocal_permittivity(&p, k).map_err(py_err)?;
    Ok((e.re, e.im))
}

/// Mesh statistics and DOF counts as a dict; `str` form via `mesh_info_text`.
#[pyfunction]
fn mesh_info<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let info = driver::mesh_info(&config.inner).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("vertices", info.vertices)?;
    d.set_item("cells", info.cells)?;
    d.set_item("edges", info.edges)?;
    d.set_item("faces", info.faces)?;
    d.set_item("boundary_faces", info.boundary_faces)?;
    d.set_item("h_max", info.h_max)?;
    d.set_item("order", info.order)?;
    d.set_item("ndofs_e", info.ndofs_e)?;
    d.set_item("ndofs_j", info.ndofs_j)?;
    d.set_item(
        "regions",
        info.regions.iter().map(|r| (r.marker, r.cells, r.volume)).collect::<Vec<_>>(),
    )?;
    d.set_item("face_markers", info.face_markers.clone())?;
    Ok(d)
}

#[pyfunction]
fn mesh_info_text(config: &PyConfig) -> PyResult<String> {
    driver::mesh_info(&config.inner).map(|i| i.to_string()).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "nhdfem")]
pub fn nhdfem_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(solve_manufactured, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(scattering, m)?)?;
    m.add_function(wrap_pyfunction!(dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(permittivity, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_info, m)?)?;
    m.add_function(wrap_pyfunction!(mesh_info_text, m)?)?;
    Ok(())
}
