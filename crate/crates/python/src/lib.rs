//! Python bindings. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use mvsc_core::dataset::{generate_synthetic as generate, load_manifest as load};
use mvsc_core::metrics::{self, EvaluationReport};
use mvsc_core::selfexpr;
use mvsc_core::{spectral, ClusteringResult, Error, MultiViewDataset, SyntheticSpec, TrainConfig};
use ndarray::Array2;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::{Map, Value};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonFiniteLoss { .. } | Error::NoConvergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_array(rows: Vec<Vec<f64>>) -> Result<Array2<f64>, String> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err("matrix rows have different lengths".into());
    }
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect()).map_err(|e| e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    to_array(rows).map_err(PyValueError::new_err)
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn report_dict<'py>(py: Python<'py>, r: &EvaluationReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("nmi", r.nmi)?;
    d.set_item("acc", r.acc)?;
    d.set_item("ar", r.ar)?;
    d.set_item("f_measure", r.f_measure)?;
    Ok(d)
}

/// Overlays the JSON object `overrides` on `base`; unknown keys are rejected.
fn merge_config(base: TrainConfig, overrides: &str) -> Result<TrainConfig, String> {
    let overlay: Map<String, Value> = serde_json::from_str(overrides).map_err(|e| e.to_string())?;
    let Value::Object(mut merged) = serde_json::to_value(&base).map_err(|e| e.to_string())? else {
        unreachable!("TrainConfig serializes to an object")
    };
    merged.extend(overlay);
    serde_json::from_value(Value::Object(merged)).map_err(|e| e.to_string())
}

/// A multi-view dataset with one row per sample in every view.
#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: MultiViewDataset,
}

#[pymethods]
impl PyDataset {
    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    #[getter]
    fn n_views(&self) -> usize {
        self.inner.n_views()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels().map(<[usize]>::to_vec)
    }

    fn view(&self, index: usize) -> PyResult<Vec<Vec<f64>>> {
        if index >= self.inner.n_views() {
            return Err(PyValueError::new_err(format!("no view {index}")));
        }
        Ok(to_rows(self.inner.view(index).rows()))
    }

    fn single_view(&self, index: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.single_view(index).map_err(to_py)?,
        })
    }

    /// Writes the manifest and CSV files; returns the manifest path.
    fn save(&self, dir: PathBuf) -> PyResult<PathBuf> {
        self.inner.save(dir).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n_samples={}, n_views={})",
            self.inner.n_samples(),
            self.inner.n_views()
        )
    }
}

/// Output of `train`.
#[pyclass(name = "TrainResult", frozen)]
struct PyTrainResult {
    inner: ClusteringResult,
}

#[pymethods]
impl PyTrainResult {
    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels.clone()
    }

    #[getter]
    fn clusters(&self) -> usize {
        self.inner.clusters
    }

    #[getter]
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        self.inner.metrics.as_ref().map(|m| report_dict(py, m)).transpose()
    }

    #[getter]
    fn affinity(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.affinity.as_array())
    }

    /// Total fine-tuning loss per epoch.
    #[getter]
    fn losses(&self) -> Vec<f64> {
        self.inner.log.totals()
    }

    fn log_csv(&self) -> String {
        self.inner.log.to_csv()
    }

    fn save_checkpoint(&self, path: PathBuf) -> PyResult<()> {
        self.inner.checkpoint().save(path).map_err(to_py)
    }
}

#[pyfunction]
#[pyo3(signature = (clusters, per_cluster, dims, rank, noise = 0.01, seed = 0))]
fn generate_synthetic(
    clusters: usize,
    per_cluster: usize,
    dims: Vec<usize>,
    rank: usize,
    noise: f64,
    seed: u64,
) -> PyResult<PyDataset> {
    let spec = SyntheticSpec {
        k: clusters,
        per_cluster,
        views: dims.len(),
        ambient_dims: dims,
        subspace_rank: rank,
        noise_sigma: noise,
        seed,
    };
    Ok(PyDataset {
        inner: generate(&spec).map_err(to_py)?,
    })
}

#[pyfunction]
fn load_manifest(path: PathBuf) -> PyResult<PyDataset> {
    Ok(PyDataset {
        inner: load(path).map_err(to_py)?,
    })
}

/// Runs the full pipeline. `config` holds any training option by name;
/// `desk_scale` starts from the short pretraining schedule.
#[pyfunction]
#[pyo3(signature = (dataset, config = None, desk_scale = false))]
fn train(
    py: Python<'_>,
    dataset: &PyDataset,
    config: Option<&Bound<'_, PyDict>>,
    desk_scale: bool,
) -> PyResult<PyTrainResult> {
    let base = if desk_scale {
        TrainConfig::desk_scale()
    } else {
        TrainConfig::default()
    };
    let cfg = match config {
        Some(d) => {
            let json: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
            merge_config(base, &json).map_err(|e| PyValueError::new_err(format!("invalid config: {e}")))?
        }
        None => base,
    };
    let ds = &dataset.inner;
    let inner = py.detach(|| mvsc_core::train(ds, &cfg)).map_err(to_py)?;
    Ok(PyTrainResult { inner })
}

#[pyfunction]
fn evaluate<'py>(py: Python<'py>, truth: Vec<usize>, pred: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
    report_dict(py, &metrics::evaluate(&truth, &pred).map_err(to_py)?)
}

#[pyfunction]
fn nmi(truth: Vec<usize>, pred: Vec<usize>) -> PyResult<f64> {
    metrics::nmi(&truth, &pred).map_err(to_py)
}

#[pyfunction]
fn acc(truth: Vec<usize>, pred: Vec<usize>) -> PyResult<f64> {
    metrics::acc(&truth, &pred).map_err(to_py)
}

#[pyfunction]
fn ari(truth: Vec<usize>, pred: Vec<usize>) -> PyResult<f64> {
    metrics::ari(&truth, &pred).map_err(to_py)
}

#[pyfunction]
fn f_measure(truth: Vec<usize>, pred: Vec<usize>) -> PyResult<f64> {
    metrics::f_measure(&truth, &pred).map_err(to_py)
}

/// `(|Z| + |Z|^T) / 2`.
#[pyfunction]
fn build_affinity(z: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(
        spectral::build_affinity(&matrix(z)?).map_err(to_py)?.as_array(),
    ))
}

#[pyfunction]
#[pyo3(signature = (affinity, k, seed = 0))]
fn spectral_cluster(py: Python<'_>, affinity: Vec<Vec<f64>>, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    let a = spectral::AffinityMatrix::new(matrix(affinity)?).map_err(to_py)?;
    py.detach(|| spectral::spectral_cluster(&a, k, seed)).map_err(to_py)
}

#[pyfunction]
fn hsic(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    selfexpr::hsic(&matrix(a)?, &matrix(b)?).map_err(to_py)
}

/// Multi-view deep subspace clustering.
#[pymodule]
fn mvsc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyTrainResult>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(load_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(acc, m)?)?;
    m.add_function(wrap_pyfunction!(ari, m)?)?;
    m.add_function(wrap_pyfunction!(f_measure, m)?)?;
    m.add_function(wrap_pyfunction!(build_affinity, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_cluster, m)?)?;
    m.add_function(wrap_pyfunction!(hsic, m)?)?;
    Ok(())
}
