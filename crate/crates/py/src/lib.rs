//! Python bindings. Errors surface as `ValueError` (bad input),
//! `ArithmeticError` (numerical failure) or `OSError`.

use hfujita_core::criteria::{classify, fujita_exponent as core_fujita_exponent, CriterionSpec};
use hfujita_core::group::{GroupParams, HeisenbergPoint};
use hfujita_core::heat_kernel::{heat_kernel_euclidean, KernelError, KernelEvaluator};
use hfujita_core::nonlinearity::{NonlinearitySpec, TimeWeightSpec};
use hfujita_core::solver::{run_simulation, InitialData, SimulationConfig, SolverError};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kernel_err(e: KernelError) -> PyErr {
    match e {
        KernelError::NonConvergence { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => value_err(e),
    }
}

fn solver_err(e: SolverError) -> PyErr {
    match e {
        SolverError::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        SolverError::Kernel(k) => kernel_err(k),
        _ => value_err(e),
    }
}

/// Heat kernel p_t at `point` = (g_1..g_n, v_1..v_n, zeta) on H^n.
#[pyfunction]
#[pyo3(signature = (t, point, n = 1))]
fn heat_kernel(t: f64, point: Vec<f64>, n: usize) -> PyResult<f64> {
    let ev = KernelEvaluator::new(GroupParams::new(n).map_err(value_err)?);
    let x = HeisenbergPoint::from_flat(&point).map_err(value_err)?;
    ev.heat_kernel_scaled(t, &x).map_err(kernel_err)
}

/// Gaussian heat kernel on R^dim.
#[pyfunction]
fn heat_kernel_euclid(t: f64, point: Vec<f64>) -> PyResult<f64> {
    heat_kernel_euclidean(point.len(), t, &point).map_err(kernel_err)
}

/// Classify the criterion integral; returns (verdict, method, tail exponent).
#[pyfunction]
#[pyo3(signature = (f, beta, phi = "constant", theta = 1.0))]
fn classify_criterion(f: &str, beta: f64, phi: &str, theta: f64) -> PyResult<(String, String, Option<f64>)> {
    let f: NonlinearitySpec = f.parse().map_err(value_err)?;
    let phi: TimeWeightSpec = phi.parse().map_err(value_err)?;
    let spec = CriterionSpec::new(phi, f, beta, theta).map_err(value_err)?;
    let r = classify(&spec).map_err(value_err)?;
    Ok((r.verdict.as_str().to_string(), r.method.as_str().to_string(), r.fitted_tail_exponent))
}

#[pyfunction]
#[pyo3(signature = (beta, r = 0.0))]
fn fujita_exponent(beta: f64, r: f64) -> PyResult<f64> {
    core_fujita_exponent(beta, r).map_err(value_err)
}

/// Run one radial simulation from a bump and return a summary dict.
#[pyfunction]
#[pyo3(signature = (f, height = 1.0, radius = 1.0, horizon = 10.0, phi = "constant"))]
fn simulate<'py>(
    py: Python<'py>,
    f: &str,
    height: f64,
    radius: f64,
    horizon: f64,
    phi: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let f: NonlinearitySpec = f.parse().map_err(value_err)?;
    let phi: TimeWeightSpec = phi.parse().map_err(value_err)?;
    let cfg = SimulationConfig::new(f, phi, InitialData::bump(height, radius), horizon);
    let outcome = py.detach(|| run_simulation(&cfg)).map_err(solver_err)?;
    let d = PyDict::new(py);
    d.set_item("verdict", outcome.verdict())?;
    d.set_item("t_star", outcome.blow_up().map(|b| b.t_star))?;
    d.set_item("final_t", outcome.state.t)?;
    d.set_item("final_sup", outcome.state.sup())?;
    d.set_item("steps", outcome.trace.iter().filter(|r| r.event == "step").count())?;
    Ok(d)
}

#[pymodule]
fn hfujita(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(heat_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(heat_kernel_euclid, m)?)?;
    m.add_function(wrap_pyfunction!(classify_criterion, m)?)?;
    m.add_function(wrap_pyfunction!(fujita_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
