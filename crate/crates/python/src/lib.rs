//! Python module `carleson_py`. Structured results come back as dicts.

pub mod api;

use std::f64::consts::FRAC_PI_4;

use carleson::systems::DiagonalSystem;
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

use api::ApiError;

fn py_err(e: ApiError) -> PyErr {
    match e {
        ApiError::Input(m) => PyValueError::new_err(m),
        ApiError::Numerical(m) => PyArithmeticError::new_err(m),
    }
}

fn to_py<'py>(py: Python<'py>, v: api::ApiResult<Value>) -> PyResult<Bound<'py, PyAny>> {
    let v = v.map_err(py_err)?;
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

/// Diagonal system `x' = Lambda x + b u` with state space `l^q`.
#[pyclass(name = "System", module = "carleson_py", frozen)]
pub struct PySystem {
    inner: DiagonalSystem,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (eigenvalues, coefficients, state_exponent = 2.0))]
    fn new(eigenvalues: Vec<Complex64>, coefficients: Vec<Complex64>, state_exponent: f64) -> PyResult<Self> {
        let inner = api::system(eigenvalues, coefficients, state_exponent).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// `heat-neumann` or `parabolic-2n` with `modes` modes.
    #[staticmethod]
    fn builtin(name: &str, modes: usize) -> PyResult<Self> {
        Ok(Self {
            inner: api::builtin(name, modes).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("System(modes={}, q={})", self.inner.len(), self.inner.state_exponent())
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<Complex64> {
        self.inner.eigenvalues().to_vec()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Complex64> {
        self.inner.coefficients().to_vec()
    }

    #[getter]
    fn state_exponent(&self) -> f64 {
        self.inner.state_exponent()
    }

    /// Admissibility verdict for inputs in `L^p(t^alpha dt)`.
    fn verdict<'py>(&self, py: Python<'py>, p: f64, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, api::verdict(&self.inner, p, alpha))
    }

    fn threshold_curve<'py>(&self, py: Python<'py>, p_grid: Vec<f64>, alpha_grid: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, api::threshold_curve(&self.inner, &p_grid, &alpha_grid))
    }

    fn sectorial<'py>(&self, py: Python<'py>, p: f64, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, api::system_sectorial(&self.inner, p, alpha))
    }

    fn empirical<'py>(&self, py: Python<'py>, p: f64, alpha: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, api::empirical(&self.inner, p, alpha))
    }

    /// `(x, ||x||_q)` for the input `t^beta e^{-rate t}`.
    fn infinite_time_map(&self, beta: f64, rate: f64) -> PyResult<(Vec<Complex64>, f64)> {
        api::infinite_time_map(&self.inner, beta, rate).map_err(py_err)
    }

    #[pyo3(signature = (kernel = "hardy", truncation = None))]
    fn double_sum<'py>(&self, py: Python<'py>, kernel: &str, truncation: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, api::double_sum(&self.inner, kernel, truncation))
    }

    #[pyo3(signature = (kernel = "hardy", truncation = None))]
    fn operator_norm<'py>(&self, py: Python<'py>, kernel: &str, truncation: Option<usize>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, api::operator_norm(&self.inner, kernel, truncation))
    }
}

#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    api::gamma(x).map_err(py_err)
}

/// Laplace transform of `t^beta e^{-rate t}` at `z`.
#[pyfunction]
fn laplace_exp_power(beta: f64, rate: f64, z: Complex64) -> PyResult<Complex64> {
    api::laplace_exp_power(beta, rate, z).map_err(py_err)
}

#[pyfunction]
fn exp_power_norm(beta: f64, rate: f64, p: f64, alpha: f64) -> PyResult<f64> {
    api::exp_power_norm(beta, rate, p, alpha).map_err(py_err)
}

/// Sectorial criterion for atoms `[(z, mass), ...]` and the weight `t^alpha`.
#[pyfunction]
#[pyo3(signature = (atoms, p, q, alpha = 0.0, theta = FRAC_PI_4))]
fn sectorial<'py>(
    py: Python<'py>,
    atoms: Vec<(Complex64, f64)>,
    p: f64,
    q: f64,
    alpha: f64,
    theta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::sectorial(&atoms, p, q, alpha, theta))
}

/// Runs a JSON analysis config and returns the report.
#[pyfunction]
fn analyze<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::analyze(config))
}

#[pyfunction]
#[pyo3(signature = (heat_modes = 10_000, parabolic_modes = 60, seed = 0))]
fn reproduce<'py>(py: Python<'py>, heat_modes: usize, parabolic_modes: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, api::reproduce(heat_modes, parabolic_modes, seed))
}

#[pymodule]
fn carleson_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_exp_power, m)?)?;
    m.add_function(wrap_pyfunction!(exp_power_norm, m)?)?;
    m.add_function(wrap_pyfunction!(sectorial, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
