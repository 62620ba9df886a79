use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn run(code: &str) -> PyResult<()> {
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals.set_item("nhdfem", wrap_pymodule!(nhdfem_py::nhdfem_module)(py))?;
        globals.set_item("CONFIGS", concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))?;
        py.run(&CString::new(code).unwrap(), Some(&globals), None)
    })
}

#[test]
fn permittivity_example() {
    run("re, im = nhdfem.permittivity(1.0, 0.0, 1.0, 1.0, 1.0)\nassert abs(re - 0.5) < 1e-14 and abs(im - 0.5) < 1e-14")
        .unwrap();
}

#[test]
fn errors_map_to_python_exceptions() {
    run(r#"
try:
    nhdfem.Config.from_toml('[problem]\nkind = "manufactured"\nbogus = 1\n')
    raise AssertionError("accepted")
except ValueError as e:
    assert "bogus" in str(e)
try:
    nhdfem.Config.load("/nonexistent.toml")
    raise AssertionError("accepted")
except OSError:
    pass
try:
    nhdfem.solve_manufactured(2, solver="gmres", restart=2, max_iter=2, tol=1e-14)
    raise AssertionError("converged")
except RuntimeError:
    pass
try:
    nhdfem.solve_manufactured(2, solver="cg")
    raise AssertionError("accepted")
except ValueError:
    pass
"#)
    .unwrap();
}

#[test]
fn manufactured_and_mesh_info() {
    run(r#"
r = nhdfem.solve_manufactured(2, order=2)
assert r["method"] == "direct_lblt", r["method"]
assert r["residual_e"] < 1e-9 and r["residual_j"] < 1e-9
cfg = nhdfem.Config.load(CONFIGS + "/convergence_r1.toml")
info = nhdfem.mesh_info(cfg)
assert info["cells"] == 48 and info["vertices"] == 27
assert "E DOFs" in nhdfem.mesh_info_text(cfg)
rows = nhdfem.convergence_study(nhdfem.Config.from_toml('[problem]\nkind = "manufactured"\n[mesh]\nn = 1\nlevels = 2\n'))
assert len(rows) == 2 and rows[0]["order_e"] is None and rows[1]["order_e"] > 0
"#)
    .unwrap();
}
