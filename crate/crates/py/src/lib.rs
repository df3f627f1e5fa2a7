//! Python bindings. Reports are returned as JSON strings with the same layout
//! as the command-line outputs.

use std::path::Path;

use grating_core::analysis::diagnose;
use grating_core::config::RunConfig;
use grating_core::kernel::{kernel_coefficient as coefficient, KernelParams, KernelTable};
use grating_core::oracle::{self, Level, SlabSpec};
use grating_core::postprocess::efficiency_report;
use grating_core::solver::solve;
use grating_core::{Complex64, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotConverged(_) | Error::Breakdown(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json(value: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Closed-form kernel coefficient `K̂(j)`.
#[pyfunction]
#[pyo3(signature = (j1, j2, k, alpha, rho_box))]
fn kernel_coefficient(j1: i64, j2: i64, k: f64, alpha: f64, rho_box: f64) -> PyResult<Complex64> {
    coefficient([j1, j2], k, alpha, rho_box).map_err(py_err)
}

/// Transfer-matrix slab reference: `(r, t, reflectance, transmittance)`.
#[pyfunction]
#[pyo3(signature = (q, k, alpha = 0.0, a = -0.5, b = 0.5))]
fn slab_reference(q: Complex64, k: f64, alpha: f64, a: f64, b: f64) -> PyResult<(Complex64, Complex64, f64, f64)> {
    let s = oracle::slab_reference(&SlabSpec::new(q, a, b, k, alpha).map_err(py_err)?);
    Ok((s.r, s.t, s.reflectance, s.transmittance))
}

/// Solves the unit-thickness slab at k = 0.9 and normal incidence on an
/// `n × n` grid: `(reflectance, transmittance, energy balance value)`.
#[pyfunction]
fn solve_slab(q: f64, n: usize) -> PyResult<(f64, f64, f64)> {
    let problem = oracle::slab_problem(q, n).map_err(py_err)?;
    let (eff, balance) = oracle::solve_efficiencies(&problem).map_err(py_err)?;
    let row = eff.row(0).ok_or_else(|| PyRuntimeError::new_err("order 0 missing"))?;
    Ok((row.e_refl, row.e_trans, balance))
}

/// Solves a configuration file; returns the efficiency table as JSON.
#[pyfunction]
fn solve_config(path: &str) -> PyResult<String> {
    let loaded = RunConfig::load(Path::new(path)).map_err(py_err)?;
    let problem = loaded.build().map_err(py_err)?;
    let table = KernelTable::new(problem.grid(), KernelParams::from_wave(problem.wave())).map_err(py_err)?;
    let s = solve(&problem, &table, &loaded.config.solve_options()).map_err(py_err)?;
    let (eff, _) = efficiency_report(&s, &problem).map_err(py_err)?;
    json(&eff)
}

/// Coercivity diagnostics of a configuration file as JSON.
#[pyfunction]
fn diagnose_config(path: &str) -> PyResult<String> {
    let loaded = RunConfig::load(Path::new(path)).map_err(py_err)?;
    let problem = loaded.build().map_err(py_err)?;
    json(&diagnose(&problem, loaded.config.analysis.smoothness_asserted).map_err(py_err)?)
}

/// Runs the oracle gate suite (`"quick"` or `"full"`); returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (level = "quick"))]
fn validate(level: &str) -> PyResult<String> {
    json(&oracle::validate(parse_level(level)?))
}

fn parse_level(level: &str) -> PyResult<Level> {
    match level {
        "quick" => Ok(Level::Quick),
        "full" => Ok(Level::Full),
        other => Err(PyValueError::new_err(format!("unknown level {other:?}; expected \"quick\" or \"full\""))),
    }
}

#[pymodule]
fn grating_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kernel_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(slab_reference, m)?)?;
    m.add_function(wrap_pyfunction!(solve_slab, m)?)?;
    m.add_function(wrap_pyfunction!(solve_config, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
