//! Python bindings: grids, systems, wave functions, field decomposition,
//! deviation sampling, trajectory ensembles and the scenario runner.

use std::collections::BTreeMap;
use std::path::PathBuf;

use infodyn::classical::integrate_hamilton;
use infodyn::rng::Purpose;
use infodyn::runner::{self, RunError, RunOptions};
use infodyn::schrodinger::{analytic_state, propagate, AnalyticState, InitialState, Method, PropagatorConfig};
use infodyn::stats::{ks_band as core_ks_band, BandLevel};
use infodyn::stochastic::{evolve_ensemble, sample_deviations as core_sample_deviations, AnalyticSource, EnsembleConfig, ModelParams};
use infodyn::{polar_decompose, Axis, AxisPotential, Boundary, ClassicalSystem, PolarFields, SpatialGrid, WaveFunction};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: infodyn::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err(e: RunError) -> PyErr {
    match e {
        RunError::Parse(_) | RunError::Validation(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn boundary(name: &str) -> PyResult<Boundary> {
    match name {
        "periodic" => Ok(Boundary::Periodic),
        "hard-wall" => Ok(Boundary::HardWall),
        other => Err(PyValueError::new_err(format!("unknown boundary `{other}` (periodic or hard-wall)"))),
    }
}

fn params_of(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    if let Some(kw) = kwargs {
        for (k, v) in kw.iter() {
            out.insert(k.extract::<String>()?, v.extract::<f64>()?);
        }
    }
    Ok(out)
}

fn axis_potential(kind: &str, p: &BTreeMap<String, f64>) -> PyResult<AxisPotential> {
    let get = |k: &str| p.get(k).copied().ok_or_else(|| PyValueError::new_err(format!("{kind} potential needs `{k}`")));
    let pot = match kind {
        "free" => AxisPotential::Free,
        "box" => AxisPotential::Box,
        "harmonic" => AxisPotential::Harmonic { omega: get("omega")?, center: p.get("center").copied().unwrap_or(0.0) },
        "quartic" => AxisPotential::Quartic { a: get("a")? },
        other => {
            return Err(PyValueError::new_err(format!("unknown potential `{other}` (free, harmonic, quartic or box)")))
        }
    };
    pot.validate().map_err(value_err)?;
    Ok(pot)
}

/// Cell-centred grid on one or two axes.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrid {
    inner: SpatialGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (extent, n_points, boundary="periodic"))]
    fn new(extent: Vec<f64>, n_points: Vec<usize>, boundary: &str) -> PyResult<Self> {
        if extent.len() != n_points.len() {
            return Err(PyValueError::new_err("extent and n_points need the same length"));
        }
        let axes = extent
            .iter()
            .zip(&n_points)
            .map(|(&e, &n)| Axis::centered(e, n))
            .collect::<infodyn::Result<Vec<_>>>()
            .map_err(value_err)?;
        let inner = SpatialGrid::new(axes, self::boundary(boundary)?).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> usize {
        self.inner.dims()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.axes().iter().map(|a| a.len()).collect()
    }

    fn spacing(&self, axis: usize) -> PyResult<f64> {
        self.checked_axis(axis).map(|a| a.spacing())
    }

    fn nodes(&self, axis: usize) -> PyResult<Vec<f64>> {
        self.checked_axis(axis).map(|a| a.nodes())
    }

    fn __repr__(&self) -> String {
        format!("Grid(shape={:?}, boundary={:?})", self.shape(), self.inner.boundary())
    }
}

impl PyGrid {
    fn checked_axis(&self, axis: usize) -> PyResult<&Axis> {
        if axis >= self.inner.dims() {
            return Err(PyValueError::new_err(format!("axis {axis} out of range for a {}-D grid", self.inner.dims())));
        }
        Ok(self.inner.axis(axis))
    }
}

/// Masses and per-axis potentials.
#[pyclass(name = "System", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySystem {
    inner: ClassicalSystem,
}

#[pymethods]
impl PySystem {
    /// One particle on a line, e.g. `System.line("harmonic", mass=1.0, omega=1.0)`.
    #[staticmethod]
    #[pyo3(signature = (potential, mass=1.0, **params))]
    fn line(potential: &str, mass: f64, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let pot = axis_potential(potential, &params_of(params)?)?;
        Ok(Self { inner: ClassicalSystem::one_dimensional(mass, pot).map_err(value_err)? })
    }

    /// Two line systems side by side, optionally coupled by `g q0 q1`.
    #[staticmethod]
    #[pyo3(signature = (first, second, coupling=0.0))]
    fn pair(first: &PySystem, second: &PySystem, coupling: f64) -> PyResult<Self> {
        let p = ClassicalSystem::pair(&first.inner, &second.inner).map_err(value_err)?;
        let inner = ClassicalSystem::with_coupling(p.masses().to_vec(), p.axis_potentials().to_vec(), coupling)
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses().to_vec()
    }

    fn potential(&self, q: Vec<f64>) -> PyResult<f64> {
        if q.len() != self.inner.dims() {
            return Err(PyValueError::new_err(format!("expected {} coordinates", self.inner.dims())));
        }
        Ok(self.inner.potential(&q))
    }

    fn hamiltonian(&self, q: Vec<f64>, p: Vec<f64>) -> PyResult<f64> {
        if q.len() != self.inner.dims() || p.len() != self.inner.dims() {
            return Err(PyValueError::new_err(format!("expected {} coordinates and momenta", self.inner.dims())));
        }
        Ok(self.inner.hamiltonian(&q, &p))
    }
}

/// Grid wave function.
#[pyclass(name = "WaveFunction", skip_from_py_object)]
#[derive(Clone)]
pub struct PyWaveFunction {
    inner: WaveFunction,
}

#[pymethods]
impl PyWaveFunction {
    /// Closed-form state sampled on a line grid, e.g.
    /// `WaveFunction.analytic(grid, "sho-coherent", omega=1.0, displacement=1.0)`.
    #[staticmethod]
    #[pyo3(signature = (grid, kind, hbar=1.0, mass=1.0, t=0.0, **params))]
    fn analytic(
        grid: &PyGrid,
        kind: &str,
        hbar: f64,
        mass: f64,
        t: f64,
        params: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let state = AnalyticState::from_kind(kind, &params_of(params)?).map_err(value_err)?;
        let inner = analytic_state(&state, &grid.inner, hbar, mass, t).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn density(&self) -> Vec<f64> {
        self.inner.density()
    }

    fn real(&self) -> Vec<f64> {
        self.inner.values().iter().map(|z| z.re).collect()
    }

    fn imag(&self) -> Vec<f64> {
        self.inner.values().iter().map(|z| z.im).collect()
    }

    fn l2_distance(&self, other: &PyWaveFunction) -> f64 {
        self.inner.l2_distance(&other.inner)
    }

    /// Evolve for `steps` solver steps; returns the final state.
    #[pyo3(signature = (system, steps, dt_solver, method="split-step", hbar=1.0))]
    fn propagate(&self, system: &PySystem, steps: usize, dt_solver: f64, method: &str, hbar: f64) -> PyResult<Self> {
        let method = match method {
            "split-step" => Method::SplitStep,
            "crank-nicolson" => Method::CrankNicolson,
            other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
        };
        let cfg = PropagatorConfig::new(method, dt_solver, steps);
        let run = propagate(&self.inner, &system.inner, hbar, &cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(Self { inner: run.last().clone() })
    }

    /// Polar decomposition into density and phase-gradient fields.
    #[pyo3(signature = (hbar=1.0))]
    fn decompose(&self, hbar: f64) -> PyResult<PyFields> {
        Ok(PyFields { inner: polar_decompose(&self.inner, hbar).map_err(value_err)? })
    }
}

/// Density and gradient fields of one wave function.
#[pyclass(name = "Fields", frozen)]
pub struct PyFields {
    inner: PolarFields,
}

#[pymethods]
impl PyFields {
    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    fn omega(&self) -> Vec<f64> {
        self.inner.omega().to_vec()
    }

    fn grad_s(&self, axis: usize) -> PyResult<Vec<f64>> {
        self.inner.grad_s().get(axis).cloned().ok_or_else(|| PyValueError::new_err(format!("no axis {axis}")))
    }

    fn grad_ln_omega(&self, axis: usize) -> PyResult<Vec<f64>> {
        self.inner.grad_ln_omega().get(axis).cloned().ok_or_else(|| PyValueError::new_err(format!("no axis {axis}")))
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn total_probability(&self) -> f64 {
        self.inner.total_probability()
    }
}

/// `n` draws of dS - dA at `|lambda|`.
#[pyfunction]
#[pyo3(signature = (lambda_, n, seed))]
fn sample_deviations(lambda_: f64, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    core_sample_deviations(lambda_, n, seed, Purpose::Deviation).map_err(value_err)
}

/// Asymptotic one-sample KS band at level 0.95 or 0.99.
#[pyfunction]
#[pyo3(signature = (n, level=0.95))]
fn ks_band(n: usize, level: f64) -> PyResult<f64> {
    let level = if level == 0.95 {
        BandLevel::P95
    } else if level == 0.99 {
        BandLevel::P99
    } else {
        return Err(PyValueError::new_err("level must be 0.95 or 0.99"));
    };
    Ok(core_ks_band(n, level))
}

/// Velocity-Verlet reference trajectory: `(times, q, p)`.
#[pyfunction]
fn classical_trajectory(
    system: &PySystem,
    q0: Vec<f64>,
    p0: Vec<f64>,
    dt: f64,
    t_end: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let tr = integrate_hamilton(&q0, &p0, &system.inner, dt, t_end).map_err(value_err)?;
    Ok((tr.times, tr.q, tr.p))
}

/// Trajectory ensemble driven by closed-form fields of a line state.
/// Returns one dict per checkpoint with `time`, `positions` and `signs`.
#[pyfunction]
#[pyo3(signature = (grid, system, kind, lambda_mag, dt, n, seed, t_end, checkpoints, hbar=1.0, osmotic=true, **params))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    system: &PySystem,
    kind: &str,
    lambda_mag: f64,
    dt: f64,
    n: usize,
    seed: u64,
    t_end: f64,
    checkpoints: Vec<f64>,
    hbar: f64,
    osmotic: bool,
    params: Option<&Bound<'py, PyDict>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let state = AnalyticState::from_kind(kind, &params_of(params)?).map_err(value_err)?;
    let mut source =
        AnalyticSource::new(InitialState::Single(state), &grid.inner, &system.inner, hbar).map_err(value_err)?;
    let model = ModelParams::with_step(lambda_mag, dt);
    let mut cfg = EnsembleConfig::new(n, seed, t_end);
    cfg.checkpoints = checkpoints;
    cfg.osmotic = osmotic;
    let ens = py
        .detach(|| evolve_ensemble(&mut source, system.inner.masses(), &model, &cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let dims = ens.dims;
    ens.checkpoints
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("time", c.time)?;
            let pos: Vec<Vec<f64>> = c.positions.iter().map(|q| q[..dims].to_vec()).collect();
            d.set_item("positions", pos)?;
            d.set_item("signs", c.signs.clone())?;
            Ok(d)
        })
        .collect()
}

/// Names of the bundled scenarios.
#[pyfunction]
fn bundled_scenarios() -> Vec<&'static str> {
    runner::bundled_names()
}

/// Resolve a scenario (bundled name or TOML path) and return its effective TOML.
#[pyfunction]
fn validate_scenario(scenario: &str) -> PyResult<String> {
    let sc = runner::load(scenario).map_err(run_err)?;
    let res = runner::validate(&sc).map_err(run_err)?;
    Ok(res.scenario.to_toml())
}

/// Run a scenario and return its manifest as a dict. Verdict failures do not
/// raise; check `manifest["exit_code"]`.
#[pyfunction]
#[pyo3(signature = (scenario, out=None, seed=None, threads=None))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario: &str,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let sc = runner::load(scenario).map_err(run_err)?;
    let opts = RunOptions { out_dir: out, seed, threads };
    let outcome = py.detach(|| runner::run(sc, &opts)).map_err(run_err)?;
    let text = outcome.manifest.to_json().map_err(run_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Python module `infodyn_py`.
#[pymodule]
pub fn infodyn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("OUT_DIR_ENV", runner::OUT_DIR_ENV)?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyWaveFunction>()?;
    m.add_class::<PyFields>()?;
    m.add_function(wrap_pyfunction!(sample_deviations, m)?)?;
    m.add_function(wrap_pyfunction!(ks_band, m)?)?;
    m.add_function(wrap_pyfunction!(classical_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(validate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
