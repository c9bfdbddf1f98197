//! Python bindings: parameter classes plus the time-domain, equilibrium, effective-model
//! and driver entry points. Covariances cross the boundary as nested lists in the
//! ordering (Q1, Q2, P1, P2).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::entangle as core;
use core::bath::Geometry;
use core::equilibrium::{RmaxMode, RmaxOptions};
use core::gaussian::CovarianceMatrix;
use core::qle::{EvolutionResult, QleConfig};

fn to_py(e: core::Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

#[pyclass(name = "SystemParams", frozen)]
struct PySystemParams {
    inner: core::gaussian::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (omega0 = 1.0, r = 0.1, kappa = 1.0))]
    fn new(omega0: f64, r: f64, kappa: f64) -> PyResult<Self> {
        let inner = core::gaussian::SystemParams::new(omega0, r, kappa).map_err(to_py)?;
        Ok(PySystemParams { inner })
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.inner.omega0
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("SystemParams(omega0={}, r={}, kappa={})", p.omega0, p.r, p.kappa)
    }
}

#[pyclass(name = "BathSpec", frozen)]
struct PyBathSpec {
    inner: core::bath::BathSpec,
}

#[pymethods]
impl PyBathSpec {
    /// geometry: "free1d", "free3d" or "waveguide" (which needs omega_gap).
    #[new]
    #[pyo3(signature = (geometry, gamma, s, omega_c, temperature = 0.0, omega_gap = None, background = true))]
    fn new(
        geometry: &str,
        gamma: f64,
        s: f64,
        omega_c: f64,
        temperature: f64,
        omega_gap: Option<f64>,
        background: bool,
    ) -> PyResult<Self> {
        let geom = Geometry::parse(geometry)
            .ok_or_else(|| PyValueError::new_err(format!("unknown geometry '{geometry}'")))?;
        let mut inner = match geom {
            Geometry::Waveguide => core::bath::BathSpec::waveguide(gamma, s, omega_c, omega_gap.unwrap_or(0.0), temperature),
            g => {
                let mut b = core::bath::BathSpec::free(g, gamma, s, omega_c, temperature);
                b.gap = omega_gap.unwrap_or(0.0);
                b
            }
        };
        inner.include_free_background = background;
        inner.validate().map_err(to_py)?;
        Ok(PyBathSpec { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn omega_c(&self) -> f64 {
        self.inner.omega_c
    }

    #[getter]
    fn temperature(&self) -> f64 {
        self.inner.temperature
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!(
            "BathSpec(geometry={:?}, gamma={}, s={}, omega_c={}, temperature={}, omega_gap={})",
            b.geometry, b.gamma, b.s, b.omega_c, b.temperature, b.gap
        )
    }
}

/// E_N(t) trajectory with its covariances.
#[pyclass(name = "Evolution", frozen)]
struct PyEvolution {
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    log_negativity: Vec<f64>,
    #[pyo3(get)]
    min_symplectic: f64,
    covariances: Vec<CovarianceMatrix>,
}

#[pymethods]
impl PyEvolution {
    fn max_log_negativity(&self) -> f64 {
        self.log_negativity.iter().copied().fold(0.0, f64::max)
    }

    fn covariance(&self, index: usize) -> PyResult<[[f64; 4]; 4]> {
        self.covariances
            .get(index)
            .map(|c| c.to_rows())
            .ok_or_else(|| PyValueError::new_err("index out of range"))
    }

    fn __len__(&self) -> usize {
        self.times.len()
    }
}

impl From<EvolutionResult> for PyEvolution {
    fn from(r: EvolutionResult) -> Self {
        PyEvolution {
            times: r.times,
            log_negativity: r.log_negativity,
            min_symplectic: r.min_symplectic,
            covariances: r.covariances,
        }
    }
}

/// Time-domain solution of the two-oscillator Langevin equations.
#[pyfunction]
#[pyo3(signature = (system, bath, t_max = 60.0, n_grid = 1000, output_dt = None))]
fn simulate(
    py: Python<'_>,
    system: PyRef<'_, PySystemParams>,
    bath: PyRef<'_, PyBathSpec>,
    t_max: f64,
    n_grid: usize,
    output_dt: Option<f64>,
) -> PyResult<PyEvolution> {
    let (sys, spec) = (system.inner, bath.inner);
    let cfg = QleConfig { t_max, n_grid, output_dt, ..Default::default() };
    py.detach(|| core::qle::simulate(&sys, &spec, &cfg)).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn equilibrium_covariance(system: PyRef<'_, PySystemParams>, bath: PyRef<'_, PyBathSpec>) -> PyResult<[[f64; 4]; 4]> {
    core::equilibrium::equilibrium_covariance(&system.inner, &bath.inner)
        .map(|c| c.to_rows())
        .map_err(to_py)
}

#[pyfunction]
fn asymptotic_negativity(system: PyRef<'_, PySystemParams>, bath: PyRef<'_, PyBathSpec>) -> PyResult<f64> {
    core::equilibrium::asymptotic_negativity(&system.inner, &bath.inner).map_err(to_py)
}

/// Logarithmic negativity (base 2) of a 4x4 covariance.
#[pyfunction]
fn log_negativity(cov: [[f64; 4]; 4]) -> PyResult<f64> {
    core::gaussian::log_negativity(&CovarianceMatrix::from_rows(cov)).map_err(to_py)
}

/// Separability distance; mode is "asymptotic" or "transient".
#[pyfunction]
#[pyo3(signature = (system, bath, mode = "asymptotic"))]
fn find_rmax(py: Python<'_>, system: PyRef<'_, PySystemParams>, bath: PyRef<'_, PyBathSpec>, mode: &str) -> PyResult<f64> {
    let mode = RmaxMode::parse(mode).ok_or_else(|| PyValueError::new_err(format!("unknown mode '{mode}'")))?;
    let (sys, spec) = (system.inner, bath.inner);
    py.detach(|| core::equilibrium::find_rmax_with(&sys, &spec, mode, &RmaxOptions::default()))
        .map(|r| r.r_max)
        .map_err(to_py)
}

fn markov_params(system: &PySystemParams, bath: &PyBathSpec, g: Option<f64>, omega_vh: f64) -> PyResult<core::markov::MarkovParams> {
    core::markov::MarkovParams::new(system.inner, &bath.inner, omega_vh, g).map_err(to_py)
}

/// Effective-model evolution; g defaults to the distance law.
#[pyfunction]
#[pyo3(signature = (system, bath, t_max = 60.0, dt = 0.1, g = None, omega_vh = 1.0, approximate = false))]
#[allow(clippy::too_many_arguments)]
fn markov_evolve(
    py: Python<'_>,
    system: PyRef<'_, PySystemParams>,
    bath: PyRef<'_, PyBathSpec>,
    t_max: f64,
    dt: f64,
    g: Option<f64>,
    omega_vh: f64,
    approximate: bool,
) -> PyResult<PyEvolution> {
    let p = markov_params(&system, &bath, g, omega_vh)?;
    py.detach(|| core::markov::evolve(&p, t_max, dt, approximate)).map(Into::into).map_err(to_py)
}

/// Stationary E_N of the effective model.
#[pyfunction]
#[pyo3(signature = (system, bath, g = None, omega_vh = 1.0))]
fn markov_asymptotic(system: PyRef<'_, PySystemParams>, bath: PyRef<'_, PyBathSpec>, g: Option<f64>, omega_vh: f64) -> PyResult<f64> {
    let p = markov_params(&system, &bath, g, omega_vh)?;
    core::markov::asymptotic_negativity(&p).map_err(to_py)
}

/// Runs a driver command on configuration text and returns the CSV.
#[pyfunction]
#[pyo3(signature = (config, command, jobs = 1))]
fn run_config(py: Python<'_>, config: &str, command: &str, jobs: usize) -> PyResult<String> {
    let cmd = core::driver::Command::parse(command)
        .ok_or_else(|| PyValueError::new_err(format!("unknown command '{command}'")))?;
    let cfg = core::driver::RunConfig::parse_str(config).map_err(to_py)?;
    py.detach(|| core::driver::run(cmd, &cfg, jobs))
        .map(|t| core::driver::to_csv_string(&t))
        .map_err(to_py)
}

/// (command, configuration text) of a bundled figure recipe.
#[pyfunction]
fn recipe(name: &str) -> PyResult<(String, String)> {
    core::driver::RECIPES
        .iter()
        .find(|r| r.0 == name)
        .map(|&(_, cmd, text)| (cmd.to_string(), text.to_string()))
        .ok_or_else(|| PyValueError::new_err(format!("unknown recipe '{name}'")))
}

#[pymodule]
fn entangle(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyBathSpec>()?;
    m.add_class::<PyEvolution>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(log_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(find_rmax, m)?)?;
    m.add_function(wrap_pyfunction!(markov_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(markov_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(recipe, m)?)?;
    Ok(())
}
