//! Python bindings: models, transforms, estimators and the config runner.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::Value;

use subordlab::criteria::{
    default_general_l_grid, default_log_s_grid, default_log_x_grid, estimate_gamma_general_l, estimate_gamma_s5,
    estimate_gamma_s6, estimate_gamma_s7, estimate_gamma_s8,
};
use subordlab::dickman::{dickman_density, dickman_rho};
use subordlab::montecarlo::{experiment_pareto_limit, ks_distance, EmpiricalDistribution};
use subordlab::runner::{list_catalog, run_config as run, Config, RunError};
use subordlab::simulate::sample_marginal;
use subordlab::transforms::{add, add_drift, compose_inner, compose_outer, tilt};
use subordlab::{Error, ModelExpr, ScaleFunction, SamplingMethod, SamplingOptions, SubordinatorModel};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NumericalFailure { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn run_err(e: RunError) -> PyErr {
    match e {
        RunError::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn to_value<T: serde::Serialize>(v: &T) -> PyResult<Value> {
    serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn sampling(method: Option<&str>, log_epsilon: Option<f64>) -> PyResult<SamplingOptions> {
    let mut opts = SamplingOptions::default();
    if let Some(m) = method {
        opts.method = match m {
            "auto" => SamplingMethod::Auto,
            "exact" => SamplingMethod::Exact,
            "compound_poisson" => SamplingMethod::CompoundPoisson,
            other => return Err(PyValueError::new_err(format!("unknown sampling method '{other}'"))),
        };
    }
    if let Some(le) = log_epsilon {
        opts.log_epsilon = le;
    }
    Ok(opts)
}

/// A driftless subordinator with the representations its family provides.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: SubordinatorModel,
}

impl PyModel {
    fn wrap(inner: SubordinatorModel) -> Self {
        PyModel { inner }
    }
}

#[pymethods]
impl PyModel {
    /// Catalog leaf, e.g. `Model.leaf("gamma", gamma=1.0, **{"lambda": 2.0})`.
    #[staticmethod]
    #[pyo3(signature = (name, **params))]
    fn leaf(name: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let params: BTreeMap<String, f64> = match params {
            Some(d) => d.extract()?,
            None => BTreeMap::new(),
        };
        let expr = ModelExpr::Leaf { name: name.to_string(), params };
        expr.build().map(Self::wrap).map_err(to_py)
    }

    /// Build from a JSON model expression as used in configs.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let expr: ModelExpr = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        expr.build().map(Self::wrap).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn known_gamma(&self) -> Option<f64> {
        self.inner.known_gamma()
    }

    fn representations(&self) -> Vec<&'static str> {
        self.inner.representations()
    }

    fn phi(&self, s: f64) -> PyResult<f64> {
        let phi = self.inner.phi().ok_or_else(|| PyValueError::new_err("model has no Laplace exponent"))?;
        Ok(phi.eval(s))
    }

    fn tail(&self, x: f64) -> PyResult<f64> {
        let tail = self.inner.tail().ok_or_else(|| PyValueError::new_err("model has no Levy tail"))?;
        Ok(tail.tail(x))
    }

    fn cdf1(&self, x: f64) -> PyResult<f64> {
        let f = self.inner.cdf1().ok_or_else(|| PyValueError::new_err("model has no time-1 cdf"))?;
        Ok(f(x))
    }

    fn density1(&self, x: f64) -> PyResult<f64> {
        let f = self.inner.density1().ok_or_else(|| PyValueError::new_err("model has no time-1 density"))?;
        Ok(f(x))
    }

    /// `n` draws of `log Y_t`; `-inf` stands for `Y_t = 0`.
    #[pyo3(signature = (t, n, seed, method=None, log_epsilon=None))]
    fn sample_log(&self, py: Python<'_>, t: f64, n: usize, seed: u64, method: Option<&str>, log_epsilon: Option<f64>) -> PyResult<Vec<f64>> {
        let opts = sampling(method, log_epsilon)?;
        let s = py.detach(|| sample_marginal(&self.inner, t, n, seed, &opts)).map_err(to_py)?;
        Ok(s.log_values().to_vec())
    }

    /// Limit index estimate for one of "S5", "S6", "S7", "S8", "GL".
    #[pyo3(signature = (criterion, grid=None, scale_power=1))]
    fn estimate(&self, py: Python<'_>, criterion: &str, grid: Option<Vec<f64>>, scale_power: u32) -> PyResult<Py<PyAny>> {
        let m = &self.inner;
        let missing = |what: &str| PyValueError::new_err(format!("{} has no {what}", m.descriptor()));
        let est = match criterion {
            "S5" => estimate_gamma_s5(m.phi().ok_or_else(|| missing("phi"))?, &grid.unwrap_or_else(default_log_s_grid)),
            "S6" => estimate_gamma_s6(m.cdf1().ok_or_else(|| missing("cdf1"))?.as_ref(), &grid.unwrap_or_else(default_log_x_grid)),
            "S7" => estimate_gamma_s7(m.tail().ok_or_else(|| missing("tail"))?, &grid.unwrap_or_else(default_log_x_grid)),
            "S8" => estimate_gamma_s8(m.density1().ok_or_else(|| missing("density1"))?.as_ref(), &grid.unwrap_or_else(default_log_x_grid)),
            "GL" => {
                let scale = ScaleFunction::neg_log_power(scale_power).map_err(to_py)?;
                estimate_gamma_general_l(m.phi().ok_or_else(|| missing("phi"))?, &scale, &grid.unwrap_or_else(default_general_l_grid))
            }
            other => return Err(PyValueError::new_err(format!("unknown criterion '{other}'"))),
        }
        .map_err(to_py)?;
        json_to_py(py, &to_value(&est)?)
    }

    fn tilt(&self, theta: f64) -> PyResult<Self> {
        tilt(&self.inner, theta).map(Self::wrap).map_err(to_py)
    }

    /// Subordinate `inner` by this model: exponent `self(inner(s))`.
    fn compose_outer(&self, inner: &PyModel) -> PyResult<Self> {
        compose_outer(&self.inner, &inner.inner).map(Self::wrap).map_err(to_py)
    }

    fn compose_inner(&self, inner: &PyModel) -> PyResult<Self> {
        compose_inner(&self.inner, &inner.inner).map(Self::wrap).map_err(to_py)
    }

    fn add(&self, other: &PyModel) -> PyResult<Self> {
        add(&self.inner, &other.inner).map(Self::wrap).map_err(to_py)
    }

    fn add_drift(&self, c: f64) -> PyResult<Self> {
        add_drift(&self.inner, c).map(Self::wrap).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.descriptor())
    }
}

/// KS reports of `Y_t^{-t}` against the Pareto limit, one per `t`.
#[pyfunction]
#[pyo3(signature = (model, t_list, n, seed, method=None, log_epsilon=None))]
fn pareto_limit(
    py: Python<'_>,
    model: &PyModel,
    t_list: Vec<f64>,
    n: usize,
    seed: u64,
    method: Option<&str>,
    log_epsilon: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let opts = sampling(method, log_epsilon)?;
    let reps = py.detach(|| experiment_pareto_limit(&model.inner, &t_list, n, seed, &opts)).map_err(to_py)?;
    json_to_py(py, &to_value(&reps)?)
}

/// One-sample KS distance of finite values (plus mass at infinity) to a Pareto law.
#[pyfunction]
#[pyo3(signature = (values, gamma, at_infinity=0))]
fn ks_pareto(values: Vec<f64>, gamma: f64, at_infinity: usize) -> PyResult<f64> {
    let law = subordlab::ParetoLaw::new(gamma).map_err(to_py)?;
    let emp = EmpiricalDistribution::new(values, at_infinity).map_err(to_py)?;
    Ok(ks_distance(&emp, &|x| law.cdf(x)))
}

#[pyfunction]
fn rho(z: f64) -> PyResult<f64> {
    dickman_rho(z).map_err(to_py)
}

#[pyfunction]
fn dickman_pdf(x: f64) -> PyResult<f64> {
    dickman_density(x).map_err(to_py)
}

/// Run a JSON config and return the report as a dict.
#[pyfunction]
#[pyo3(signature = (config_json, seed=None))]
fn run_config(py: Python<'_>, config_json: &str, seed: Option<u64>) -> PyResult<Py<PyAny>> {
    let config = Config::parse(config_json).map_err(run_err)?;
    let report = py.detach(|| run(&config, seed)).map_err(run_err)?;
    json_to_py(py, &to_value(&report)?)
}

#[pyfunction]
fn catalog(py: Python<'_>) -> PyResult<Py<PyAny>> {
    json_to_py(py, &to_value(&list_catalog())?)
}

#[pymodule]
fn pysubordlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(pareto_limit, m)?)?;
    m.add_function(wrap_pyfunction!(ks_pareto, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(dickman_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    Ok(())
}
