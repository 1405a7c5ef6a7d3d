use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use polybody::approx::{default_eval_grid, dn_series as core_dn_series, FunctionSpec};
use polybody::fekete::{approx_fekete, build_mesh};
use polybody::rate::{closed_form_for, minimize_rate as core_minimize_rate, RateOptions, SingularSetQuadric};

fn err(e: polybody::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "ConvexBody", frozen, from_py_object)]
#[derive(Clone)]
struct PyConvexBody(polybody::ConvexBody);

#[pymethods]
impl PyConvexBody {
    /// Parse `lq:q=..,d=..[,scale=..]` or `poly:d=..,verts=[(..),..]`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(PyConvexBody).map_err(err)
    }

    #[staticmethod]
    fn lq(q: f64, dim: usize) -> PyResult<Self> {
        polybody::ConvexBody::lq(q, dim).map(PyConvexBody).map_err(err)
    }

    #[staticmethod]
    fn simplex(dim: usize) -> PyResult<Self> {
        polybody::ConvexBody::simplex(dim).map(PyConvexBody).map_err(err)
    }

    #[staticmethod]
    fn cube(dim: usize) -> PyResult<Self> {
        polybody::ConvexBody::cube(dim).map(PyConvexBody).map_err(err)
    }

    #[staticmethod]
    fn polytope(vertices: Vec<Vec<f64>>) -> PyResult<Self> {
        let dim = vertices.first().map_or(0, Vec::len);
        polybody::ConvexBody::polytope(dim, vertices).map(PyConvexBody).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn scaled(&self, c: f64) -> PyResult<Self> {
        self.0.scaled(c).map(PyConvexBody).map_err(err)
    }

    fn degree_norm(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.minkowski_degree_norm(&x).map_err(err)
    }

    fn support(&self, x: Vec<f64>) -> PyResult<f64> {
        self.0.support_value(&x).map_err(err)
    }

    fn index_set(&self, n: usize) -> Vec<Vec<usize>> {
        self.0.enumerate_index_set(n).indices.iter().map(|j| j.0.clone()).collect()
    }

    fn d_n(&self, n: usize) -> usize {
        self.0.enumerate_index_set(n).d_n()
    }

    fn volume(&self) -> f64 {
        self.0.volume()
    }

    fn __repr__(&self) -> String {
        format!("ConvexBody('{}')", self.0)
    }
}

fn product_set(set: Option<&str>, dim: usize) -> PyResult<polybody::ProductSet> {
    match set {
        Some(s) => s.parse().map_err(err),
        None => polybody::ProductSet::cube(dim).map_err(err),
    }
}

/// V_{P,K}(z); `set` defaults to the unit cube.
#[pyfunction]
#[pyo3(signature = (body, z, set=None))]
fn extremal_value(body: &PyConvexBody, z: Vec<Complex64>, set: Option<&str>) -> PyResult<f64> {
    let k = product_set(set, body.0.dim())?;
    let ext = polybody::ProductExtremal::new(&body.0, &k).map_err(err)?;
    ext.eval(&z).map(|v| v.value).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (body, sing, set=None, starts=64, seed=0))]
fn minimize_rate<'py>(
    py: Python<'py>,
    body: &PyConvexBody,
    sing: &str,
    set: Option<&str>,
    starts: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let quadric: SingularSetQuadric = sing.parse().map_err(err)?;
    let k = product_set(set, body.0.dim())?;
    let opts = RateOptions {
        starts,
        seed,
        ..RateOptions::default()
    };
    let rep = py
        .detach(|| core_minimize_rate(&body.0, &k, &quadric, &opts))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rate", rep.rate)?;
    d.set_item("log_rate", rep.log_rate)?;
    d.set_item("minimizer", rep.minimizer.clone())?;
    d.set_item("kkt_spread", rep.kkt_spread)?;
    d.set_item("classification", rep.classification.to_string())?;
    d.set_item("closed_form", closed_form_for(&body.0, &k, &quadric))?;
    d.set_item("starts", rep.starts_used)?;
    d.set_item("seed", rep.seed)?;
    Ok(d)
}

/// Chebyshev truncation errors on `[-1,1]^d` for a `runge:a=..;r=..` function.
#[pyfunction]
#[pyo3(signature = (body, func, ns, grid=None))]
fn dn_series<'py>(
    py: Python<'py>,
    body: &PyConvexBody,
    func: &str,
    ns: Vec<usize>,
    grid: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let f: FunctionSpec = func.parse().map_err(err)?;
    let grid = grid.unwrap_or_else(|| default_eval_grid(body.0.dim()));
    let s = py.detach(|| core_dn_series(&f, &body.0, &ns, grid)).map_err(err)?;
    let d = PyDict::new(py);
    let rows: Vec<(usize, usize, f64)> = s.rows.iter().map(|r| (r.n, r.d_n, r.d_hat)).collect();
    d.set_item("rows", rows)?;
    d.set_item("R_hat", s.fitted_rate)?;
    d.set_item("fit_range", s.fit_range)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (body, n, mesh=60, set=None))]
fn fekete<'py>(
    py: Python<'py>,
    body: &PyConvexBody,
    n: usize,
    mesh: usize,
    set: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let k = product_set(set, body.0.dim())?;
    let fs = py
        .detach(|| build_mesh(&k, mesh).and_then(|m| approx_fekete(&m, &body.0, &k, n)))
        .map_err(err)?;
    let r = fs.report();
    let d = PyDict::new(py);
    d.set_item("nodes", fs.nodes.clone())?;
    d.set_item("n", r.n)?;
    d.set_item("d_n", r.d_n)?;
    d.set_item("vdm_log_abs", r.vdm_log_abs)?;
    d.set_item("max_psi_on_mesh", r.max_psi_on_mesh)?;
    d.set_item("swaps_performed", r.swaps_performed)?;
    d.set_item("kronecker_residual", r.kronecker_residual)?;
    Ok(d)
}

#[pymodule(name = "polybody")]
fn polybody_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConvexBody>()?;
    m.add_function(wrap_pyfunction!(extremal_value, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_rate, m)?)?;
    m.add_function(wrap_pyfunction!(dn_series, m)?)?;
    m.add_function(wrap_pyfunction!(fekete, m)?)?;
    Ok(())
}
