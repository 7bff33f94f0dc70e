//! Python bindings: the instance type plus the maximal operators, embedding
//! sums, Bellman certificates, and searches, with reports returned as plain
//! dicts.

use carleson_lab::bellman;
use carleson_lab::dyadic::{l2_norm_scalar, normalize_carleson};
use carleson_lab::embedding;
use carleson_lab::linalg::{self, SymMatrix};
use carleson_lab::maximal;
use carleson_lab::search::{self, Instance, Objective};
use carleson_lab::verify::{run_suites, VerifyConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn err(e: carleson_lab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any().unbind()
            } else {
                n.as_f64()
                    .unwrap_or(f64::NAN)
                    .into_pyobject(py)?
                    .into_any()
                    .unbind()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn to_py_dict<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<SymMatrix> {
    let d = rows.len();
    let mut flat = Vec::with_capacity(d * d);
    for row in rows {
        if row.len() != d {
            return Err(PyValueError::new_err("matrix rows must form a square"));
        }
        flat.extend_from_slice(row);
    }
    SymMatrix::from_row_major(d, &flat).map_err(err)
}

fn matrix_to_rows(m: &SymMatrix) -> Vec<Vec<f64>> {
    let d = m.dim();
    (0..d)
        .map(|i| (0..d).map(|j| m.entry(i, j)).collect())
        .collect()
}

/// A weight/function/sequence instance on the dyadic tree.
#[pyclass(name = "Instance", skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    /// Build from leaf data; matrices are row-major d*d lists, alpha maps
    /// "level,index" keys to values.
    #[new]
    #[pyo3(signature = (d, depth, w_leaves, f_leaves, g_leaves=None, alpha=None, seed=0))]
    fn new(
        d: usize,
        depth: usize,
        w_leaves: Vec<Vec<f64>>,
        f_leaves: Vec<Vec<f64>>,
        g_leaves: Option<Vec<Vec<f64>>>,
        alpha: Option<std::collections::BTreeMap<String, f64>>,
        seed: u64,
    ) -> PyResult<Self> {
        let file = serde_json::json!({
            "d": d,
            "depth": depth,
            "W_leaves": w_leaves,
            "f_leaves": f_leaves,
            "g_leaves": g_leaves,
            "alpha": alpha.unwrap_or_default(),
            "seed": seed,
        });
        let inner = Instance::from_json(&file.to_string()).map_err(err)?;
        Ok(PyInstance { inner })
    }

    /// Seeded random instance (alpha normalized to Carleson constant 1).
    #[staticmethod]
    fn random(d: usize, depth: usize, spread: f64, seed: u64) -> PyInstance {
        PyInstance {
            inner: search::random_instance(d, depth, spread, seed),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<PyInstance> {
        Ok(PyInstance {
            inner: Instance::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(d={}, depth={}, seed={})",
            self.inner.d, self.inner.depth, self.inner.seed
        )
    }
}

/// PSD square root of a symmetric matrix given as nested rows.
#[pyfunction]
fn sym_sqrt(m: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix_to_rows(&matrix_from_rows(&m)?.sym_sqrt().map_err(err)?))
}

/// Inverse of an SPD matrix.
#[pyfunction]
fn sym_inv(m: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix_to_rows(&matrix_from_rows(&m)?.sym_inv().map_err(err)?))
}

/// PSD order A <= B.
#[pyfunction]
fn psd_leq(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<bool> {
    linalg::psd_leq(&matrix_from_rows(&a)?, &matrix_from_rows(&b)?).map_err(err)
}

/// Operator norm (largest eigenvalue magnitude).
#[pyfunction]
fn op_norm(m: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(matrix_from_rows(&m)?.op_norm())
}

/// The matrix-weighted maximal function: per-leaf values, its L2 norm, and
/// the linearization-oracle value for the same norm.
#[pyfunction]
fn max_usual(inst: PyRef<'_, PyInstance>) -> PyResult<(Vec<f64>, f64, f64)> {
    let w = inst.inner.weight().map_err(err)?;
    let (field, sel) = maximal::max_usual(&w, &inst.inner.f).map_err(err)?;
    let norm = l2_norm_scalar(&field, None).map_err(err)?;
    let oracle = maximal::max_usual_norm_oracle(&w, &inst.inner.f, &sel).map_err(err)?;
    Ok((field.leaves().to_vec(), norm, oracle))
}

/// L2 norms of the poor-memory maximal process, one per level 0..=k_max.
#[pyfunction]
#[pyo3(signature = (inst, k_max=None))]
fn poor_memory_norms(inst: PyRef<'_, PyInstance>, k_max: Option<usize>) -> PyResult<Vec<f64>> {
    let w = inst.inner.weight().map_err(err)?;
    let k = k_max.unwrap_or(inst.inner.depth).min(inst.inner.depth);
    let (fields, _) = maximal::max_poor_memory(&w, &inst.inner.f, k).map_err(err)?;
    fields
        .iter()
        .map(|f| l2_norm_scalar(f, None).map_err(err))
        .collect()
}

/// The bilinear embedding report as a dict.
#[pyfunction]
fn bet_report(py: Python<'_>, inst: PyRef<'_, PyInstance>) -> PyResult<Py<PyAny>> {
    let w = inst.inner.weight().map_err(err)?;
    let report =
        embedding::bet_sum(&w, &inst.inner.f, &inst.inner.g, &inst.inner.alpha).map_err(err)?;
    to_py_dict(py, &report)
}

/// The linear matrix-measure embedding sum for the instance's sequence.
#[pyfunction]
fn cet_sum(inst: PyRef<'_, PyInstance>) -> PyResult<f64> {
    let w = inst.inner.weight().map_err(err)?;
    let amat = inst
        .inner
        .amat
        .as_ref()
        .ok_or_else(|| PyValueError::new_err("instance has no matrix sequence"))?;
    embedding::cet_sum(&w, &inst.inner.f, amat).map_err(err)
}

/// The altered-condition constant (alpha normalized to 1 first).
#[pyfunction]
fn redundant_constant(inst: PyRef<'_, PyInstance>) -> PyResult<f64> {
    let w = inst.inner.weight().map_err(err)?;
    let alpha = normalize_carleson(&inst.inner.alpha, 1.0).map_err(err)?;
    embedding::redundant_constant(&alpha, &w).map_err(err)
}

#[pyfunction]
fn a2_characteristic(inst: PyRef<'_, PyInstance>) -> PyResult<f64> {
    let w = inst.inner.weight().map_err(err)?;
    embedding::a2_characteristic(&w).map_err(err)
}

#[pyfunction]
fn carleson_constant(inst: PyRef<'_, PyInstance>) -> PyResult<f64> {
    Ok(carleson_lab::dyadic::carleson_constant(&inst.inner.alpha))
}

/// Bellman certificate for the poor-memory maximal bound, as a dict.
#[pyfunction]
#[pyo3(signature = (inst, k_max=None))]
fn bmax_certificate(
    py: Python<'_>,
    inst: PyRef<'_, PyInstance>,
    k_max: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let w = inst.inner.weight().map_err(err)?;
    let k = k_max.unwrap_or(inst.inner.depth).min(inst.inner.depth);
    let (_, mem) = maximal::max_poor_memory(&w, &inst.inner.f, k).map_err(err)?;
    let report = bellman::bmax_certificate(&w, &inst.inner.f, &mem, k).map_err(err)?;
    to_py_dict(py, &report)
}

/// Bellman certificate for the altered Carleson condition, as a dict.
#[pyfunction]
#[pyo3(signature = (inst, samples=1000, seed=0))]
fn bred_certificate(
    py: Python<'_>,
    inst: PyRef<'_, PyInstance>,
    samples: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let w = inst.inner.weight().map_err(err)?;
    let alpha = normalize_carleson(&inst.inner.alpha, 1.0).map_err(err)?;
    let report = bellman::bred_certificate(&w, &alpha, samples, seed).map_err(err)?;
    to_py_dict(py, &report)
}

/// Accept-if-better search from a starting instance. Returns
/// (best_value, max_evaluated, best_instance).
#[pyfunction]
fn hill_climb(
    objective: &str,
    start: PyRef<'_, PyInstance>,
    steps: u64,
    seed: u64,
) -> PyResult<(f64, f64, PyInstance)> {
    let obj = Objective::parse(objective)
        .ok_or_else(|| PyValueError::new_err(format!("unknown objective '{objective}'")))?;
    let result = search::hill_climb(&obj, &start.inner, steps, seed).map_err(err)?;
    Ok((
        result.best_value,
        result.max_evaluated,
        PyInstance { inner: result.best },
    ))
}

/// Dimension sweep of the identity-weight embedding ratio; returns rows of
/// (d, best, reference).
#[pyfunction]
fn dim_growth(
    dims: Vec<usize>,
    trials_per_d: u64,
    depth: usize,
    steps: u64,
    seed: u64,
) -> PyResult<Vec<(usize, f64, f64)>> {
    let table = search::dim_growth_experiment(&dims, trials_per_d, depth, steps, seed).map_err(err)?;
    Ok(table
        .rows
        .iter()
        .map(|r| (r.d, r.best, r.reference))
        .collect())
}

/// Run the full property-suite battery; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (trials=25, d=3, depth=5, seed=42))]
fn run_verify(
    py: Python<'_>,
    trials: u64,
    d: usize,
    depth: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let cfg = VerifyConfig {
        d,
        depth,
        seed,
        trials,
        ..VerifyConfig::default()
    };
    let report = run_suites(&cfg).map_err(err)?;
    to_py_dict(py, &report)
}

#[pymodule]
fn carleson_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(sym_sqrt, m)?)?;
    m.add_function(wrap_pyfunction!(sym_inv, m)?)?;
    m.add_function(wrap_pyfunction!(psd_leq, m)?)?;
    m.add_function(wrap_pyfunction!(op_norm, m)?)?;
    m.add_function(wrap_pyfunction!(max_usual, m)?)?;
    m.add_function(wrap_pyfunction!(poor_memory_norms, m)?)?;
    m.add_function(wrap_pyfunction!(bet_report, m)?)?;
    m.add_function(wrap_pyfunction!(cet_sum, m)?)?;
    m.add_function(wrap_pyfunction!(redundant_constant, m)?)?;
    m.add_function(wrap_pyfunction!(a2_characteristic, m)?)?;
    m.add_function(wrap_pyfunction!(carleson_constant, m)?)?;
    m.add_function(wrap_pyfunction!(bmax_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(bred_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(hill_climb, m)?)?;
    m.add_function(wrap_pyfunction!(dim_growth, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
