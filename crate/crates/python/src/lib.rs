//! Python bindings for the `qenc` encoding library.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qenc_core::bench::{emit_report, BenchReport, ExperimentConfig, ReportFormat};
use qenc_core::embeddings::{self, GaussianState, PureState};
use qenc_core::preprocess::{write_synthetic, SynthConfig};
use qenc_core::readout::ReadoutSpec;
use qenc_core::strategies::{self, EncoderOptions};
use qenc_core::{CacheStats, EmbeddingKind, Granularity, KeyPolicy, QencError, StrategyKind};

fn py_err(e: QencError) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = QencError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn policy(decimals: Option<u32>) -> KeyPolicy {
    match decimals {
        Some(decimals) => KeyPolicy::Round { decimals },
        None => KeyPolicy::Exact,
    }
}

fn stats_dict<'py>(py: Python<'py>, s: &CacheStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("embed_calls", s.embed_calls)?;
    d.set_item("cache_hits", s.cache_hits)?;
    d.set_item("unique_keys", s.unique_keys)?;
    d.set_item("wall_seconds", s.wall_seconds)?;
    d.set_item("cells_total", s.cells_total)?;
    d.set_item("rows_total", s.rows_total)?;
    Ok(d)
}

/// Dense row-major matrix of features with optional integer class labels.
#[pyclass(name = "FeatureMatrix", module = "qenc", frozen)]
struct PyFeatureMatrix {
    inner: qenc_core::FeatureMatrix,
}

#[pymethods]
impl PyFeatureMatrix {
    #[new]
    #[pyo3(signature = (rows, labels=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<u32>>) -> PyResult<Self> {
        let inner = qenc_core::FeatureMatrix::from_rows(&rows, labels).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows(), self.inner.n_cols())
    }

    #[getter]
    fn labels(&self) -> Option<Vec<u32>> {
        self.inner.labels().map(<[u32]>::to_vec)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "FeatureMatrix(rows={}, cols={}, labelled={})",
            self.inner.n_rows(),
            self.inner.n_cols(),
            self.inner.labels().is_some()
        )
    }
}

/// Embedding choice plus the granularity it is applied at.
#[pyclass(name = "EmbeddingSpec", module = "qenc", frozen)]
struct PyEmbeddingSpec {
    inner: qenc_core::EmbeddingSpec,
}

#[pymethods]
impl PyEmbeddingSpec {
    #[new]
    #[pyo3(signature = (kind, granularity="cell", layers=None, qaoa_params=None, seed=None))]
    fn new(
        kind: &str,
        granularity: &str,
        layers: Option<usize>,
        qaoa_params: Option<Vec<f64>>,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let mut spec = qenc_core::EmbeddingSpec::new(
            parse::<EmbeddingKind>(kind)?,
            parse::<Granularity>(granularity)?,
        );
        if let Some(l) = layers {
            spec = spec.with_layers(l);
        }
        if let Some(p) = qaoa_params {
            spec = spec.with_qaoa_params(p);
        }
        if let Some(s) = seed {
            spec = spec.with_seed(s);
        }
        spec.validate().map_err(py_err)?;
        Ok(Self { inner: spec })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn granularity(&self) -> &'static str {
        self.inner.granularity.name()
    }

    #[getter]
    fn layers(&self) -> usize {
        self.inner.layers
    }

    fn __repr__(&self) -> String {
        format!(
            "EmbeddingSpec(kind={:?}, granularity={:?}, layers={})",
            self.inner.kind.name(),
            self.inner.granularity.name(),
            self.inner.layers
        )
    }
}

/// Result of one encoding pass: states, call accounting and readout.
#[pyclass(name = "EncodedDataset", module = "qenc", frozen)]
struct PyEncodedDataset {
    inner: strategies::EncodedDataset,
}

#[pymethods]
impl PyEncodedDataset {
    #[getter]
    fn strategy(&self) -> &'static str {
        self.inner.strategy.name()
    }

    #[getter]
    fn embed_calls(&self) -> u64 {
        self.inner.stats.embed_calls
    }

    #[getter]
    fn cache_hits(&self) -> u64 {
        self.inner.stats.cache_hits
    }

    #[getter]
    fn fallback_rows(&self) -> usize {
        self.inner.fallback_rows
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        stats_dict(py, &self.inner.stats)
    }

    /// Per-class accounting as `{class: stats}`; empty for class-agnostic strategies.
    fn class_stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for c in &self.inner.class_stats {
            d.set_item(c.class, stats_dict(py, &c.stats)?)?;
        }
        Ok(d)
    }

    /// Classical features read out from every encoded row, using the default observables.
    fn features(&self) -> PyResult<PyFeatureMatrix> {
        let inner = self
            .inner
            .features(&ReadoutSpec::default())
            .map_err(py_err)?;
        Ok(PyFeatureMatrix { inner })
    }
}

/// Stateful encoder: `fit_encode` fills the caches, `transform` reuses them.
#[pyclass(name = "Encoder", module = "qenc")]
struct PyEncoder {
    inner: strategies::Encoder,
}

#[pymethods]
impl PyEncoder {
    #[new]
    #[pyo3(signature = (spec, strategy, round_decimals=None))]
    fn new(spec: &PyEmbeddingSpec, strategy: &str, round_decimals: Option<u32>) -> PyResult<Self> {
        let options = EncoderOptions {
            policy: policy(round_decimals),
            ..EncoderOptions::default()
        };
        let inner = strategies::Encoder::new(spec.inner.clone(), parse(strategy)?, options)
            .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn cached_states(&self) -> usize {
        self.inner.cached_states()
    }

    fn fit_encode(&mut self, matrix: &PyFeatureMatrix) -> PyResult<PyEncodedDataset> {
        let inner = self.inner.fit_encode(&matrix.inner).map_err(py_err)?;
        Ok(PyEncodedDataset { inner })
    }

    fn transform(&mut self, matrix: &PyFeatureMatrix) -> PyResult<PyEncodedDataset> {
        let inner = self.inner.transform(&matrix.inner).map_err(py_err)?;
        Ok(PyEncodedDataset { inner })
    }
}

/// Encodes `matrix` once with a fresh encoder.
#[pyfunction]
fn encode(
    matrix: &PyFeatureMatrix,
    spec: &PyEmbeddingSpec,
    strategy: &str,
) -> PyResult<PyEncodedDataset> {
    let s: StrategyKind = parse(strategy)?;
    let inner = strategies::encode(&matrix.inner, &spec.inner, s).map_err(py_err)?;
    Ok(PyEncodedDataset { inner })
}

/// Distinct values in first-appearance order as `(value, count)` pairs.
#[pyfunction]
#[pyo3(signature = (matrix, round_decimals=None))]
fn unique_values(
    matrix: &PyFeatureMatrix,
    round_decimals: Option<u32>,
) -> PyResult<Vec<(f64, usize)>> {
    let u = strategies::unique_values(&matrix.inner, policy(round_decimals)).map_err(py_err)?;
    Ok(u.into_iter().map(|e| (e.value, e.count)).collect())
}

fn amplitudes(state: PyResult<PureState>) -> PyResult<Vec<Complex64>> {
    Ok(state?.amplitudes().to_vec())
}

fn moments(state: GaussianState) -> (Vec<f64>, Vec<Vec<f64>>) {
    let cov = state.covariance();
    let rows = (0..cov.nrows())
        .map(|i| (0..cov.ncols()).map(|j| cov[(i, j)]).collect())
        .collect();
    (state.mean().to_vec(), rows)
}

#[pyfunction]
fn basis_state(bits: Vec<f64>) -> PyResult<Vec<Complex64>> {
    amplitudes(embeddings::basis_embed(&bits).map_err(py_err))
}

#[pyfunction]
fn angle_state(x: Vec<f64>) -> PyResult<Vec<Complex64>> {
    amplitudes(embeddings::angle_embed(&x).map_err(py_err))
}

#[pyfunction]
#[pyo3(signature = (x, layers=1))]
fn iqp_state(x: Vec<f64>, layers: usize) -> PyResult<Vec<Complex64>> {
    amplitudes(embeddings::iqp_embed(&x, layers).map_err(py_err))
}

/// QAOA-style state; parameters default to the seeded draw used by `EmbeddingSpec`.
#[pyfunction]
#[pyo3(signature = (x, params=None, layers=1, seed=0))]
fn qaoa_state(
    x: Vec<f64>,
    params: Option<Vec<f64>>,
    layers: usize,
    seed: u64,
) -> PyResult<Vec<Complex64>> {
    let params = params.unwrap_or_else(|| embeddings::seeded_qaoa_params(seed, x.len(), layers));
    amplitudes(embeddings::qaoa_embed(&x, &params, layers).map_err(py_err))
}

/// `(mean, covariance)` of the displaced vacuum, one mode per feature.
#[pyfunction]
fn displacement_state(x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    embeddings::displacement_embed(&x)
        .map(moments)
        .map_err(py_err)
}

/// `(mean, covariance)` of the squeezed vacuum, one mode per feature.
#[pyfunction]
fn squeezing_state(x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    embeddings::squeezing_embed(&x).map(moments).map_err(py_err)
}

/// Outcome of a benchmark run.
#[pyclass(name = "BenchReport", module = "qenc", frozen)]
struct PyBenchReport {
    inner: BenchReport,
}

#[pymethods]
impl PyBenchReport {
    #[getter]
    fn config_hash(&self) -> String {
        self.inner.data.environment.config_hash.clone()
    }

    #[pyo3(signature = (format="table"))]
    fn render(&self, format: &str) -> PyResult<String> {
        self.inner.data.render(parse(format)?).map_err(py_err)
    }

    /// Writes the report files into `directory` and returns their paths.
    #[pyo3(signature = (directory, formats=None))]
    fn emit(&self, directory: PathBuf, formats: Option<Vec<String>>) -> PyResult<Vec<PathBuf>> {
        let formats = match formats {
            Some(names) => names
                .iter()
                .map(|n| parse::<ReportFormat>(n))
                .collect::<PyResult<Vec<_>>>()?,
            None => vec![ReportFormat::Table, ReportFormat::Csv, ReportFormat::Jsonl],
        };
        emit_report(&self.inner, &directory, &formats).map_err(py_err)
    }
}

/// Runs the full benchmark described by a JSON config, with optional
/// `key.path=value` overrides applied on top.
#[pyfunction]
#[pyo3(signature = (config_json="{}", overrides=None))]
fn run_experiment(
    py: Python<'_>,
    config_json: &str,
    overrides: Option<Vec<String>>,
) -> PyResult<PyBenchReport> {
    let value = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("config is not valid JSON: {e}")))?;
    let config =
        ExperimentConfig::resolve(value, &overrides.unwrap_or_default()).map_err(py_err)?;
    let inner = py
        .detach(|| qenc_core::bench::run_experiment(&config))
        .map_err(py_err)?;
    Ok(PyBenchReport { inner })
}

/// Writes the synthetic churn table and its manifest into `directory`.
#[pyfunction]
#[pyo3(signature = (directory, rows=None, churn_rate=None, seed=None))]
fn synthesize(
    directory: PathBuf,
    rows: Option<usize>,
    churn_rate: Option<f64>,
    seed: Option<u64>,
) -> PyResult<(PathBuf, PathBuf)> {
    let d = SynthConfig::default();
    let config = SynthConfig {
        rows: rows.unwrap_or(d.rows),
        churn_rate: churn_rate.unwrap_or(d.churn_rate),
        seed: seed.unwrap_or(d.seed),
    };
    write_synthetic(&directory, &config).map_err(py_err)
}

#[pymodule]
fn qenc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeatureMatrix>()?;
    m.add_class::<PyEmbeddingSpec>()?;
    m.add_class::<PyEncodedDataset>()?;
    m.add_class::<PyEncoder>()?;
    m.add_class::<PyBenchReport>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(unique_values, m)?)?;
    m.add_function(wrap_pyfunction!(basis_state, m)?)?;
    m.add_function(wrap_pyfunction!(angle_state, m)?)?;
    m.add_function(wrap_pyfunction!(iqp_state, m)?)?;
    m.add_function(wrap_pyfunction!(qaoa_state, m)?)?;
    m.add_function(wrap_pyfunction!(displacement_state, m)?)?;
    m.add_function(wrap_pyfunction!(squeezing_state, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    Ok(())
}
