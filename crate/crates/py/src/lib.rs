//! Python module `magkit`: orbit projections, heat-flow fields and the check suites.

use std::path::Path;
use std::sync::Arc;

use magkit::heatflow::{self, FlowParams};
use magkit::{branching, kmap, KMapping, MagError, PermutationOrbit, SourceSet};
use magkit_cli::config::ExperimentConfig;
use magkit_cli::{run, suites};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: MagError) -> PyErr {
    match e {
        MagError::Validation(_) | MagError::Capability(_) => PyValueError::new_err(e.to_string()),
        MagError::Numeric { .. } => PyArithmeticError::new_err(e.to_string()),
        MagError::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn orbit(sources: Vec<Vec<f64>>) -> PyResult<Arc<PermutationOrbit>> {
    let s = SourceSet::new(sources).map_err(py_err)?;
    Ok(Arc::new(PermutationOrbit::new(s).map_err(py_err)?))
}

fn params(sources: Vec<Vec<f64>>, epsilon: f64) -> PyResult<FlowParams> {
    FlowParams::new(epsilon, orbit(sources)?).map_err(py_err)
}

/// Nearest orbit element: `(permutation, image, squared distance)`.
#[pyfunction]
fn nearest_permutation(sources: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<(Vec<usize>, Vec<f64>, f64)> {
    let p = kmap::nearest_permutation(&KMapping::new(y), &*orbit(sources)?).map_err(py_err)?;
    Ok((p.perm, p.image.coords, p.dist2))
}

/// Minimal-norm point of the tie hull.
#[pyfunction]
#[pyo3(signature = (sources, y, rel_tol = kmap::DEFAULT_REL_TOL))]
fn proj_o(sources: Vec<Vec<f64>>, y: Vec<f64>, rel_tol: f64) -> PyResult<Vec<f64>> {
    Ok(kmap::proj_o(&KMapping::new(y), &*orbit(sources)?, rel_tol).map_err(py_err)?.coords)
}

#[pyfunction]
fn m_velocity(sources: Vec<Vec<f64>>, y: Vec<f64>, t: f64, epsilon: f64) -> PyResult<Vec<f64>> {
    Ok(heatflow::m_velocity(&KMapping::new(y), t, &params(sources, epsilon)?).map_err(py_err)?.coords)
}

#[pyfunction]
fn force_field(sources: Vec<Vec<f64>>, y: Vec<f64>, t: f64, epsilon: f64) -> PyResult<Vec<f64>> {
    Ok(heatflow::force_field(&KMapping::new(y), t, &params(sources, epsilon)?).map_err(py_err)?.coords)
}

#[pyfunction]
fn quantum_potential(sources: Vec<Vec<f64>>, y: Vec<f64>, t: f64, epsilon: f64) -> PyResult<f64> {
    heatflow::quantum_potential_mixture(&KMapping::new(y), t, &params(sources, epsilon)?).map_err(py_err)
}

#[pyfunction]
fn default_exponents(d_total: usize) -> (f64, f64, f64) {
    branching::default_exponents(d_total)
}

/// Runs a JSON config; returns the written file names.
#[pyfunction]
#[pyo3(signature = (config_json, out = None))]
fn run_config(config_json: &str, out: Option<&str>) -> PyResult<Vec<String>> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let summary = run::run(&cfg, out.map(Path::new)).map_err(py_err)?;
    let mut files = summary.files;
    files.push("manifest.json".into());
    Ok(files)
}

/// `(id, name, passed, measured, tolerance, detail)` per check of a suite.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0))]
fn check(suite: &str, seed: u64) -> PyResult<Vec<(u32, String, bool, f64, f64, String)>> {
    let ids = suites::suite_ids(suite).ok_or_else(|| PyValueError::new_err(format!("unknown suite {suite:?}")))?;
    let opts = suites::SuiteOptions { seed, ..Default::default() };
    Ok(suites::run_ids(&ids, &opts)
        .into_iter()
        .map(|o| (o.id, o.name.to_string(), o.passed, o.measured, o.tolerance, o.detail))
        .collect())
}

#[pymodule]
#[pyo3(name = "magkit")]
fn magkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(nearest_permutation, m)?)?;
    m.add_function(wrap_pyfunction!(proj_o, m)?)?;
    m.add_function(wrap_pyfunction!(m_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(force_field, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_potential, m)?)?;
    m.add_function(wrap_pyfunction!(default_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
