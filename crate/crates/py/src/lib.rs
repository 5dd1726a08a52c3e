//! Python bindings for the redctl toolkit.
//!
//! The module exposes the built-in systems and the main analyses: structure
//! diagnostics, simulation with conservation reporting, Lie-bracket rank
//! checks, recurrence probes, properness profiles, and steering. Reports are
//! returned as plain Python dicts/lists mirroring the CLI's JSON output.

use nalgebra::DVector;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use redctl_core::control::{ControlSignal, ControlSystem};
use redctl_core::error::Error;
use redctl_core::integrate::{conservation_report, integrate, IntegratorOptions};
use redctl_core::larc;
use redctl_core::poisson::State;
use redctl_core::stability;
use redctl_core::steer::{self, SteerOptions};
use redctl_core::systems::SystemSpec;
use std::sync::Arc;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::GuardViolation { .. }
        | Error::StepLimitExceeded { .. }
        | Error::StepUnderflow { .. }
        | Error::SamplerExhausted { .. }
        | Error::SteerFailed { .. } => PyRuntimeError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn state_from(x: Vec<f64>, dim: usize) -> PyResult<State> {
    if x.len() != dim {
        return Err(PyValueError::new_err(format!(
            "expected a state of dimension {dim}, got {}",
            x.len()
        )));
    }
    Ok(DVector::from_vec(x))
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64()
                    .ok_or_else(|| PyValueError::new_err("non-finite number"))?
                    .into_pyobject(py)?
                    .into_any()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn integrator_options(rel_tol: f64, abs_tol: f64) -> IntegratorOptions {
    IntegratorOptions::with_tols(rel_tol, abs_tol)
}

/// One of the built-in control systems.
#[pyclass(frozen)]
struct System {
    inner: Arc<ControlSystem>,
}

impl System {
    fn sys(&self) -> &ControlSystem {
        &self.inner
    }
}

#[pymethods]
impl System {
    #[getter]
    fn name(&self) -> String {
        self.sys().name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.sys().dim()
    }

    #[getter]
    fn num_controls(&self) -> usize {
        self.sys().num_controls()
    }

    #[getter]
    fn coord_names(&self) -> Vec<String> {
        self.sys().coord_names().to_vec()
    }

    fn guard(&self, x: Vec<f64>) -> PyResult<bool> {
        Ok(self.sys().guard(&state_from(x, self.sys().dim())?))
    }

    fn drift(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = state_from(x, self.sys().dim())?;
        Ok(self.sys().drift().value(&x).iter().cloned().collect())
    }

    fn rhs(&self, x: Vec<f64>, u: Vec<f64>) -> PyResult<Vec<f64>> {
        let x = state_from(x, self.sys().dim())?;
        let u = DVector::from_vec(u);
        Ok(self
            .sys()
            .rhs(&x, &u)
            .map_err(to_py_err)?
            .iter()
            .cloned()
            .collect())
    }

    fn hamiltonian(&self, x: Vec<f64>) -> PyResult<Option<f64>> {
        let x = state_from(x, self.sys().dim())?;
        Ok(self.sys().hamiltonian().map(|h| h.value(&x)))
    }

    fn structure_matrix(&self, x: Vec<f64>) -> PyResult<Option<Vec<Vec<f64>>>> {
        let x = state_from(x, self.sys().dim())?;
        match self.sys().structure() {
            None => Ok(None),
            Some(ps) => {
                let j = ps.matrix_at(&x).map_err(to_py_err)?;
                Ok(Some(
                    (0..j.nrows())
                        .map(|i| j.row(i).iter().cloned().collect())
                        .collect(),
                ))
            }
        }
    }

    fn jacobi_residual(&self, x: Vec<f64>) -> PyResult<f64> {
        let x = state_from(x, self.sys().dim())?;
        let ps = self
            .sys()
            .structure()
            .ok_or_else(|| PyValueError::new_err("system carries no Poisson structure"))?;
        ps.jacobi_residual(&x).map_err(to_py_err)
    }

    fn casimir_residuals(&self, x: Vec<f64>) -> PyResult<Vec<(String, f64)>> {
        let x = state_from(x, self.sys().dim())?;
        let ps = self
            .sys()
            .structure()
            .ok_or_else(|| PyValueError::new_err("system carries no Poisson structure"))?;
        self.sys()
            .casimirs()
            .iter()
            .map(|c| {
                ps.casimir_residual(c, &x)
                    .map(|r| (c.label().to_string(), r))
                    .map_err(to_py_err)
            })
            .collect()
    }

    #[pyo3(signature = (x, tol=1e-8))]
    fn kernel_basis(&self, x: Vec<f64>, tol: f64) -> PyResult<Vec<Vec<f64>>> {
        let x = state_from(x, self.sys().dim())?;
        let ps = self
            .sys()
            .structure()
            .ok_or_else(|| PyValueError::new_err("system carries no Poisson structure"))?;
        Ok(ps
            .kernel_basis(&x, tol)
            .map_err(to_py_err)?
            .into_iter()
            .map(|v| v.iter().cloned().collect())
            .collect())
    }

    fn integral_values(&self, x: Vec<f64>) -> PyResult<Vec<(String, f64)>> {
        let x = state_from(x, self.sys().dim())?;
        Ok(self
            .sys()
            .integrals()
            .iter()
            .map(|obs| (obs.label().to_string(), obs.value(&x)))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "System(name='{}', dim={}, controls={})",
            self.sys().name(),
            self.sys().dim(),
            self.sys().num_controls()
        )
    }
}

/// Build a built-in system by name ("vortex", "threewave", "bodies"),
/// optionally parameterized by a JSON string with the same schema as the
/// CLI's parameter files.
#[pyfunction]
#[pyo3(signature = (name, params_json=None))]
fn system(name: &str, params_json: Option<&str>) -> PyResult<System> {
    let spec = match params_json {
        Some(text) => serde_json::from_str::<SystemSpec>(text)
            .map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => SystemSpec::by_name(name),
    };
    let spec = if params_json.is_some() && spec.system != name {
        return Err(PyValueError::new_err(format!(
            "params name '{}' disagrees with requested '{name}'",
            spec.system
        )));
    } else {
        spec
    };
    Ok(System {
        inner: Arc::new(spec.build().map_err(to_py_err)?),
    })
}

/// Integrate the system over `[t0, t1]`, optionally under a control signal
/// (JSON string with breakpoints/values). Returns times, states, controls,
/// step counters, and the conservation report of the known integrals.
#[pyfunction]
#[pyo3(signature = (system, x0, t0, t1, rel_tol=1e-8, abs_tol=1e-10, signal_json=None))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    system: &System,
    x0: Vec<f64>,
    t0: f64,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
    signal_json: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let sys = system.sys();
    let x0 = state_from(x0, sys.dim())?;
    let signal = match signal_json {
        Some(text) => Some(ControlSignal::from_json(text).map_err(to_py_err)?),
        None => None,
    };
    let traj = integrate(
        sys,
        &x0,
        signal.as_ref(),
        (t0, t1),
        &integrator_options(rel_tol, abs_tol),
    )
    .map_err(to_py_err)?;
    let mut value = traj.to_json();
    if let Some(obj) = value.as_object_mut() {
        obj.insert(
            "conservation".into(),
            serde_json::to_value(conservation_report(&traj, sys.integrals()))
                .map_err(|e| PyValueError::new_err(e.to_string()))?,
        );
    }
    json_to_py(py, &value)
}

/// Lie-algebra rank report at a point.
#[pyfunction]
#[pyo3(signature = (system, x, depth=3, tol=1e-6))]
fn larc_rank<'py>(
    py: Python<'py>,
    system: &System,
    x: Vec<f64>,
    depth: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let sys = system.sys();
    let x = state_from(x, sys.dim())?;
    let report = larc::larc_rank(sys, &x, depth, tol).map_err(to_py_err)?;
    json_to_py(py, &report.to_json())
}

/// Sampled rank scan over the system's default sampling box.
#[pyfunction]
#[pyo3(signature = (system, samples=100, depth=3, tol=1e-6, seed=0))]
fn larc_scan<'py>(
    py: Python<'py>,
    system: &System,
    samples: usize,
    depth: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let scan = larc::larc_scan(system.sys(), None, samples, depth, tol, seed).map_err(to_py_err)?;
    json_to_py(py, &scan.to_json())
}

/// First return of the uncontrolled flow into the ball around `x0`, or None.
#[pyfunction]
#[pyo3(signature = (system, x0, radius, t_min, t_max, rel_tol=1e-8, abs_tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn recurrence<'py>(
    py: Python<'py>,
    system: &System,
    x0: Vec<f64>,
    radius: f64,
    t_min: f64,
    t_max: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<Option<Bound<'py, PyAny>>> {
    let sys = system.sys();
    let x0 = state_from(x0, sys.dim())?;
    let result = stability::recurrence_probe(
        sys,
        &x0,
        radius,
        t_min,
        t_max,
        &integrator_options(rel_tol, abs_tol),
    )
    .map_err(to_py_err)?;
    result
        .map(|rec| {
            json_to_py(
                py,
                &serde_json::json!({"t_star": rec.t_star, "dist": rec.dist}),
            )
        })
        .transpose()
}

/// Nonwandering evidence around `x0`, or None.
#[pyfunction]
#[pyo3(signature = (system, x0, radius, t_min, t_max, samples=8, seed=0, rel_tol=1e-8, abs_tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn nonwandering<'py>(
    py: Python<'py>,
    system: &System,
    x0: Vec<f64>,
    radius: f64,
    t_min: f64,
    t_max: f64,
    samples: usize,
    seed: u64,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<Option<Bound<'py, PyAny>>> {
    let sys = system.sys();
    let x0 = state_from(x0, sys.dim())?;
    let result = stability::nonwandering_probe(
        sys,
        &x0,
        radius,
        t_min,
        t_max,
        samples,
        seed,
        &integrator_options(rel_tol, abs_tol),
    )
    .map_err(to_py_err)?;
    result.map(|ev| json_to_py(py, &ev.to_json())).transpose()
}

/// Properness profile of the system's conserved map over growing spheres.
#[pyfunction]
#[pyo3(signature = (name, radii, samples=128, seed=0, params_json=None))]
fn properness<'py>(
    py: Python<'py>,
    name: &str,
    radii: Vec<f64>,
    samples: usize,
    seed: u64,
    params_json: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = match params_json {
        Some(text) => serde_json::from_str::<SystemSpec>(text)
            .map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => SystemSpec::by_name(name),
    };
    let profile = redctl_core::systems::properness_profile(&spec, &radii, samples, seed)
        .map_err(to_py_err)?;
    json_to_py(
        py,
        &serde_json::to_value(&profile).map_err(|e| PyValueError::new_err(e.to_string()))?,
    )
}

/// Plan a bounded piecewise-constant control from `x0` to within `goal_tol`
/// of `x_goal` and verify it by independent replay.
#[pyfunction]
#[pyo3(signature = (system, x0, x_goal, goal_tol=1e-2, dt=0.1, samples=8, goal_bias=0.1, max_nodes=20_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn plan_steer<'py>(
    py: Python<'py>,
    system: &System,
    x0: Vec<f64>,
    x_goal: Vec<f64>,
    goal_tol: f64,
    dt: f64,
    samples: usize,
    goal_bias: f64,
    max_nodes: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let sys = system.sys();
    let x0 = state_from(x0, sys.dim())?;
    let x_goal = state_from(x_goal, sys.dim())?;
    let opts = SteerOptions {
        goal_tol,
        dt_expand: dt,
        n_control_samples: samples,
        goal_bias,
        max_nodes,
        seed,
        metric_weights: None,
    };
    let result = steer::steer(sys, &x0, &x_goal, &opts).map_err(to_py_err)?;
    let replay = steer::verify_plan(
        sys,
        &x0,
        &result.signal,
        &x_goal,
        2.0 * goal_tol,
        &integrator_options(1e-10, 1e-12),
    )
    .map_err(to_py_err)?;
    let mut value = result.to_json();
    if let Some(obj) = value.as_object_mut() {
        obj.insert(
            "replay".into(),
            serde_json::to_value(&replay).map_err(|e| PyValueError::new_err(e.to_string()))?,
        );
    }
    json_to_py(py, &value)
}

/// Re-integrate a signal (JSON string) and compare the terminal state with
/// the goal.
#[pyfunction]
#[pyo3(signature = (system, x0, signal_json, x_goal, tol, rel_tol=1e-10, abs_tol=1e-12))]
#[allow(clippy::too_many_arguments)]
fn verify_plan<'py>(
    py: Python<'py>,
    system: &System,
    x0: Vec<f64>,
    signal_json: &str,
    x_goal: Vec<f64>,
    tol: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let sys = system.sys();
    let x0 = state_from(x0, sys.dim())?;
    let x_goal = state_from(x_goal, sys.dim())?;
    let signal = ControlSignal::from_json(signal_json).map_err(to_py_err)?;
    let report = steer::verify_plan(
        sys,
        &x0,
        &signal,
        &x_goal,
        tol,
        &integrator_options(rel_tol, abs_tol),
    )
    .map_err(to_py_err)?;
    json_to_py(
        py,
        &serde_json::to_value(&report).map_err(|e| PyValueError::new_err(e.to_string()))?,
    )
}

#[pymodule]
fn redctl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<System>()?;
    m.add_function(wrap_pyfunction!(system, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(larc_rank, m)?)?;
    m.add_function(wrap_pyfunction!(larc_scan, m)?)?;
    m.add_function(wrap_pyfunction!(recurrence, m)?)?;
    m.add_function(wrap_pyfunction!(nonwandering, m)?)?;
    m.add_function(wrap_pyfunction!(properness, m)?)?;
    m.add_function(wrap_pyfunction!(plan_steer, m)?)?;
    m.add_function(wrap_pyfunction!(verify_plan, m)?)?;
    Ok(())
}
