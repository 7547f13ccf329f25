//! Python bindings for the vortexlab core: radial profiles, field
//! configurations, the planar solver, the linearized operator, cutoff
//! vortices, the geometric diagnostics and the experiment runner.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use vortexlab::experiment::{self, Command, Invocation};
use vortexlab::fermi;
use vortexlab::fields::{self, snapshot};
use vortexlab::grid::{Grid2, Region};
use vortexlab::{geometry, linearized, planar, radial};

fn to_py(e: vortexlab::Error) -> PyErr {
    let msg = format!("{}: {e}", e.code());
    if e.is_precondition() {
        PyValueError::new_err(msg)
    } else {
        PyRuntimeError::new_err(msg)
    }
}

/// Reports cross the boundary as plain dicts via JSON.
fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "RadialProfile", module = "vortexlab_py")]
#[derive(Clone)]
struct PyRadialProfile {
    inner: radial::RadialProfile,
}

#[pymethods]
impl PyRadialProfile {
    /// Shoots for the degree-one vortex on `[0, r_max]`.
    #[staticmethod]
    #[pyo3(signature = (r_max = 20.0, tol = 1e-8))]
    fn solve(r_max: f64, tol: f64) -> PyResult<Self> {
        Ok(Self { inner: radial::solve_bogomolny(r_max, tol).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (dir, stem = "profile"))]
    fn load(dir: PathBuf, stem: &str) -> PyResult<Self> {
        Ok(Self { inner: radial::RadialProfile::load(dir, stem).map_err(to_py)? })
    }

    #[pyo3(signature = (dir, stem = "profile"))]
    fn save(&self, dir: PathBuf, stem: &str) -> PyResult<()> {
        self.inner.save(dir, stem).map_err(to_py)
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.inner.r_max()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing()
    }

    #[getter]
    fn shoot_slope(&self) -> f64 {
        self.inner.shoot_slope
    }

    #[getter]
    fn r(&self) -> Vec<f64> {
        self.inner.r.clone()
    }

    #[getter]
    fn f(&self) -> Vec<f64> {
        self.inner.f.clone()
    }

    #[getter]
    fn a(&self) -> Vec<f64> {
        self.inner.a.clone()
    }

    /// `(f, a, f', a')` at radius `r`.
    fn eval(&self, r: f64) -> PyResult<(f64, f64, f64, f64)> {
        let s = self.inner.eval(r).map_err(to_py)?;
        Ok((s.f, s.a, s.f_prime, s.a_prime))
    }

    fn first_order_residual(&self) -> (f64, f64) {
        self.inner.first_order_residual()
    }

    fn second_order_residual(&self) -> (f64, f64) {
        radial::second_order_residual(&self.inner)
    }

    /// Fitted decay rates of `1 - f` and `1 - a` over `[r_lo, r_hi]`.
    fn decay_fit(&self, r_lo: f64, r_hi: f64) -> PyResult<(f64, f64)> {
        radial::decay_fit(&self.inner, r_lo, r_hi).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("RadialProfile(r_max={}, nodes={})", self.inner.r_max(), self.inner.r.len())
    }
}

#[pyclass(name = "FieldConfiguration", module = "vortexlab_py")]
#[derive(Clone)]
struct PyField {
    inner: fields::FieldConfiguration,
}

#[pymethods]
impl PyField {
    /// Samples the vortex centred at `center` on the square
    /// `[-half_width, half_width]^2` with node spacing `spacing`.
    #[staticmethod]
    #[pyo3(signature = (profile, half_width, spacing, center = [0.0, 0.0], epsilon = 1.0))]
    fn vortex(profile: &PyRadialProfile, half_width: f64, spacing: f64, center: [f64; 2], epsilon: f64) -> PyResult<Self> {
        let grid = Grid2::new(half_width, spacing).map_err(to_py)?.grid();
        Ok(Self { inner: radial::sample_vortex(&profile.inner, &grid, center, epsilon).map_err(to_py)? })
    }

    /// Vortex trace on the boundary and the degree-one vacuum inside.
    #[staticmethod]
    #[pyo3(signature = (half_width, spacing, epsilon = 1.0))]
    fn vortex_trace(half_width: f64, spacing: f64, epsilon: f64) -> PyResult<Self> {
        let grid = Grid2::new(half_width, spacing).map_err(to_py)?.grid();
        Ok(Self { inner: planar::vortex_trace_initial(&grid, epsilon).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: snapshot::load(path).map_err(to_py)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        snapshot::save(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Node positions, one list per node.
    fn positions(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len()).map(|i| self.inner.grid.position(i)).collect()
    }

    fn modulus(&self) -> Vec<f64> {
        self.inner.modulus()
    }

    fn u(&self) -> Vec<Complex64> {
        self.inner.u.clone()
    }

    fn a(&self) -> Vec<Vec<f64>> {
        self.inner.a.clone()
    }

    /// Energy split over the whole grid, or over a ball when `radius` is given.
    #[pyo3(signature = (center = None, radius = None))]
    fn energy<'py>(&self, py: Python<'py>, center: Option<Vec<f64>>, radius: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
        let region = match radius {
            Some(r) => Region::ball(&center.unwrap_or_else(|| vec![0.0; self.inner.dim()]), r),
            None => Region::All,
        };
        to_dict(py, &fields::energy(&self.inner, &region).map_err(to_py)?)
    }

    /// Sup norms `(|S_u|, |S_A|)` of the Euler–Lagrange residual on nodes
    /// at least `margin` nodes from the boundary.
    #[pyo3(signature = (margin = 1))]
    fn residual(&self, margin: usize) -> PyResult<(f64, f64)> {
        let s = fields::euler_lagrange_residual(&self.inner).map_err(to_py)?;
        let g = &self.inner.grid;
        Ok(s.split_sup_where(|i| g.is_inside_margin(i, margin)))
    }

    fn __repr__(&self) -> String {
        format!("FieldConfiguration(dim={}, nodes={}, epsilon={})", self.inner.dim(), self.inner.len(), self.inner.epsilon)
    }
}

/// Relaxes `init` with its boundary held fixed. Returns the solution and
/// the convergence report; failure to converge raises.
#[pyfunction]
#[pyo3(signature = (init, settings = None))]
fn solve_planar<'py>(py: Python<'py>, init: &PyField, settings: Option<&Bound<'py, PyDict>>) -> PyResult<(PyField, Bound<'py, PyAny>)> {
    let settings: planar::SolveSettings = match settings {
        Some(d) => {
            let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?
        }
        None => planar::SolveSettings::default(),
    };
    let cfg = init.inner.clone();
    let grid = cfg.grid.clone();
    let (out, report) = py
        .allow_threads(|| planar::solve_planar(cfg.epsilon, &grid, cfg, &settings))
        .map_err(to_py)?;
    Ok((PyField { inner: out }, to_dict(py, &report)?))
}

#[pyclass(name = "LinearizedSystem", module = "vortexlab_py")]
struct PyLinearized {
    inner: linearized::LinearizedSystem,
    base: fields::FieldConfiguration,
}

#[pymethods]
impl PyLinearized {
    #[new]
    fn new(base: &PyField) -> PyResult<Self> {
        let inner = linearized::assemble(&base.inner).map_err(to_py)?;
        Ok(Self { inner, base: base.inner.clone() })
    }

    #[getter]
    fn unknowns(&self) -> usize {
        self.inner.unknowns()
    }

    /// Compares the decomposed operator with a difference quotient of the
    /// residual along a seeded random perturbation.
    #[pyo3(signature = (seed, delta = 1e-4, bumps = 6, width = 1.0, margin = 1.5))]
    fn decomposition_check<'py>(&self, py: Python<'py>, seed: u64, delta: f64, bumps: usize, width: f64, margin: f64) -> PyResult<Bound<'py, PyAny>> {
        let p = linearized::random_perturbation(&self.base.grid, seed, bumps, width, margin).map_err(to_py)?;
        to_dict(py, &linearized::decomposition_check(&self.inner, &p, delta).map_err(to_py)?)
    }

    /// `|L v| / |v|` in the interior for the two translational modes of
    /// the vortex centred at `center`.
    #[pyo3(signature = (profile, center = [0.0, 0.0], margin = 2))]
    fn zero_mode_ratios(&self, profile: &PyRadialProfile, center: [f64; 2], margin: usize) -> PyResult<Vec<f64>> {
        let g = &self.base.grid;
        let modes = linearized::translational_zero_modes_scaled(&profile.inner, g, center, self.base.epsilon).map_err(to_py)?;
        modes
            .iter()
            .map(|v| Ok(self.inner.apply_l(v).map_err(to_py)?.sup_norm_where(|i| g.is_inside_margin(i, margin)) / v.sup_norm()))
            .collect()
    }

    /// Lowest eigenvalues on the gauge slice orthogonal to the translational modes.
    #[pyo3(signature = (profile, center = [0.0, 0.0], count = 3, tol = 1e-6, max_iterations = 200))]
    fn eigen_probe<'py>(
        &self,
        py: Python<'py>,
        profile: &PyRadialProfile,
        center: [f64; 2],
        count: usize,
        tol: f64,
        max_iterations: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let modes = linearized::translational_zero_modes_scaled(&profile.inner, &self.base.grid, center, self.base.epsilon).map_err(to_py)?;
        let report = py.allow_threads(|| linearized::eigen_probe(&self.inner, &modes, count, tol, max_iterations)).map_err(to_py)?;
        to_dict(py, &report)
    }
}

/// Residual of the cutoff vortex at scale `epsilon`, as a dict with the
/// radial nodes and the sup norms.
#[pyfunction]
fn cutoff_residual<'py>(py: Python<'py>, profile: &PyRadialProfile, epsilon: f64) -> PyResult<Bound<'py, PyAny>> {
    let cv = fermi::build_cutoff_vortex(epsilon, &profile.inner).map_err(to_py)?;
    to_dict(py, &cv.residual)
}

/// Least-squares slope of `log y` against `log x`.
#[pyfunction]
fn log_log_slope(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    fermi::log_log_slope(&x, &y).map_err(to_py)
}

#[pyfunction]
fn excess<'py>(py: Python<'py>, config: &PyField, center: Vec<f64>, radius: f64, plane: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &geometry::excess(&config.inner, &center, radius, &plane).map_err(to_py)?)
}

#[pyfunction]
fn density_ratio<'py>(py: Python<'py>, config: &PyField, center: Vec<f64>, radius: f64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &geometry::density_ratio(&config.inner, &center, radius).map_err(to_py)?)
}

/// Zeros of `u`, one entry per normal slice crossing.
#[pyfunction]
fn nodal_points<'py>(py: Python<'py>, config: &PyField) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &geometry::extract_nodal_set(&config.inner).map_err(to_py)?)
}

/// Runs a CLI subcommand in-process and returns its manifest. Failures
/// raise with the machine-readable error object as the message.
#[pyfunction]
#[pyo3(signature = (command, config, threads = None, out = None))]
fn run_experiment<'py>(py: Python<'py>, command: &str, config: PathBuf, threads: Option<usize>, out: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let command: Command = serde_json::from_value(serde_json::Value::String(command.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown command {command:?}")))?;
    let inv = Invocation { command, config_path: &config, threads, out };
    match py.allow_threads(|| experiment::run(inv)) {
        Ok(outcome) => to_dict(py, &outcome.manifest),
        Err((e, _)) => {
            let body = e.to_json().to_string();
            Err(match e.exit_code() {
                2 => PyValueError::new_err(body),
                _ => PyRuntimeError::new_err(body),
            })
        }
    }
}

#[pymodule]
fn vortexlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRadialProfile>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyLinearized>()?;
    m.add_function(wrap_pyfunction!(solve_planar, m)?)?;
    m.add_function(wrap_pyfunction!(cutoff_residual, m)?)?;
    m.add_function(wrap_pyfunction!(log_log_slope, m)?)?;
    m.add_function(wrap_pyfunction!(excess, m)?)?;
    m.add_function(wrap_pyfunction!(density_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(nodal_points, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
