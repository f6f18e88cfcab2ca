//! Python bindings: datasets, resampling, bagged ensembles with OOB
//! estimates, experiment metrics and whole-suite runs.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use seqboot::cart::TreeHyperparams;
use seqboot::datagen::{self, SyntheticName, SyntheticSpec};
use seqboot::experiments::{self, DataSource, DatasetKind, Exp4Config, ExperimentKind, MetricRecord, SchemePair};
use seqboot::harness::{self, DatasetSource, OutputFormat, RunConfig};
use seqboot::ingest::{self, DatasetManifest};
use seqboot::resampling::{self, Scheme, SchemeConfig, DEFAULT_RHO};
use seqboot::{ensemble, Prediction, Stream, Target, Task};

fn err(e: seqboot::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_scheme(s: &str) -> PyResult<Scheme> {
    match s.to_ascii_lowercase().as_str() {
        "classical" | "oob" => Ok(Scheme::Classical),
        "sequential" | "sb" | "sb_oob" => Ok(Scheme::Sequential),
        _ => Err(PyValueError::new_err(format!("unknown scheme `{s}`"))),
    }
}

/// An immutable table of finite features with class labels or real responses.
#[pyclass(name = "Dataset", module = "pyseqboot", frozen)]
struct PyDataset {
    inner: seqboot::Dataset,
}

#[pymethods]
impl PyDataset {
    /// `task` is "classification" (labels 0..C-1) or "regression".
    #[new]
    #[pyo3(signature = (features, target, task, num_classes=None, name="data"))]
    fn new(
        features: Vec<Vec<f64>>,
        target: Vec<f64>,
        task: &str,
        num_classes: Option<usize>,
        name: &str,
    ) -> PyResult<Self> {
        let (target, task) = match task {
            "classification" => {
                let mut labels = Vec::with_capacity(target.len());
                for &v in &target {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(PyValueError::new_err(format!("class label {v} is not a non-negative integer")));
                    }
                    labels.push(v as usize);
                }
                let c = num_classes.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
                (Target::Class(labels), Task::Classification { num_classes: c })
            }
            "regression" => (Target::Real(target), Task::Regression),
            other => return Err(PyValueError::new_err(format!("unknown task `{other}`"))),
        };
        let inner = seqboot::Dataset::from_rows(name, &features, target, task).map_err(err)?;
        Ok(PyDataset { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, n={}, n_features={}, task={})",
            self.inner.name(),
            self.inner.len(),
            self.inner.n_features(),
            task_name(self.inner.task())
        )
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn task(&self) -> String {
        task_name(self.inner.task())
    }

    #[getter]
    fn num_classes(&self) -> Option<usize> {
        self.inner.task().num_classes()
    }

    fn row(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!("row {i} out of range")));
        }
        Ok(self.inner.row(i).to_vec())
    }

    fn features(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    /// Labels as floats for classification, responses for regression.
    fn target(&self) -> Vec<f64> {
        match self.inner.target() {
            Target::Class(y) => y.iter().map(|&c| c as f64).collect(),
            Target::Real(y) => y.clone(),
        }
    }
}

fn task_name(task: Task) -> String {
    match task {
        Task::Classification { .. } => "classification".into(),
        Task::Regression => "regression".into(),
    }
}

fn prediction_to_py(py: Python<'_>, p: &Prediction) -> PyResult<Py<PyAny>> {
    Ok(match p {
        Prediction::Proportions(v) => v.clone().into_pyobject(py)?.into_any().unbind(),
        Prediction::Value(v) => v.into_pyobject(py)?.into_any().unbind(),
    })
}

/// A bagged CART ensemble built under one resampling scheme.
#[pyclass(name = "Ensemble", module = "pyseqboot", frozen)]
struct PyEnsemble {
    inner: seqboot::BaggedEnsemble,
}

#[pymethods]
impl PyEnsemble {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme().to_string()
    }

    /// Raw draw sequence of every replicate.
    fn resamples(&self) -> Vec<Vec<usize>> {
        self.inner.resamples().iter().map(|r| r.indices().to_vec()).collect()
    }

    fn distinct_counts(&self) -> Vec<usize> {
        self.inner.resamples().iter().map(resampling::distinct_count).collect()
    }

    /// For every observation, the replicates it is out-of-bag for.
    fn oob_sets(&self) -> Vec<Vec<usize>> {
        let sets = ensemble::oob_sets(&self.inner);
        (0..sets.n_observations()).map(|i| sets.oob(i).to_vec()).collect()
    }

    /// `{"error", "covered", "excluded", "predictions"}` over covered rows.
    fn oob_error<'py>(&self, py: Python<'py>, train: &PyDataset) -> PyResult<Bound<'py, PyDict>> {
        let report = ensemble::oob_error(&self.inner, &ensemble::oob_sets(&self.inner), &train.inner).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("error", report.error)?;
        d.set_item("covered", report.predictions.len())?;
        d.set_item("excluded", report.excluded)?;
        let preds = PyDict::new(py);
        for (i, p) in &report.predictions {
            preds.set_item(i, prediction_to_py(py, p)?)?;
        }
        d.set_item("predictions", preds)?;
        Ok(d)
    }

    /// Class proportions (classification) or mean (regression) over all trees.
    fn predict(&self, py: Python<'_>, x: Vec<f64>) -> PyResult<Py<PyAny>> {
        prediction_to_py(py, &ensemble::ensemble_predict(&self.inner, &x).map_err(err)?)
    }

    fn test_error(&self, test: &PyDataset) -> PyResult<f64> {
        ensemble::test_error(&self.inner, &test.inner).map_err(err)
    }

    fn leaf_counts(&self) -> Vec<usize> {
        self.inner.trees().iter().map(|t| t.n_leaves()).collect()
    }
}

/// Fits `B` trees on replicates drawn under `scheme` ("classical" or "sequential").
#[pyfunction]
#[pyo3(signature = (train, scheme="classical", seed=1, B=100, rho=DEFAULT_RHO))]
#[allow(non_snake_case)]
fn fit_bagged(py: Python<'_>, train: &PyDataset, scheme: &str, seed: u64, B: usize, rho: f64) -> PyResult<PyEnsemble> {
    let cfg = SchemeConfig::new(parse_scheme(scheme)?, rho, seed, B).map_err(err)?;
    let hp = TreeHyperparams::standard(train.inner.task());
    let data = &train.inner;
    let inner = py.detach(|| ensemble::fit_bagged(data, &cfg, &hp)).map_err(err)?;
    Ok(PyEnsemble { inner })
}

#[pyfunction]
fn target_distinct(n: usize, rho: f64) -> PyResult<usize> {
    resampling::target_distinct(n, rho).map_err(err)
}

/// Draw sequence of one classical replicate (`n` draws with replacement).
#[pyfunction]
#[pyo3(signature = (n, seed))]
fn classical_resample(n: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(resampling::multinomial_resample(n, &mut Stream::new(seed)).map_err(err)?.indices().to_vec())
}

/// Draw sequence of one sequential replicate, stopping at `k` distinct.
#[pyfunction]
#[pyo3(signature = (n, k, seed))]
fn sequential_resample(n: usize, k: usize, seed: u64) -> PyResult<Vec<usize>> {
    Ok(resampling::sequential_resample(n, k, &mut Stream::new(seed)).map_err(err)?.indices().to_vec())
}

/// `(train, test)` from a synthetic generator.
#[pyfunction]
#[pyo3(signature = (name, seed=1, n_train=None, n_test=None, noise=true))]
fn generate(
    name: &str,
    seed: u64,
    n_train: Option<usize>,
    n_test: Option<usize>,
    noise: bool,
) -> PyResult<(PyDataset, PyDataset)> {
    let name: SyntheticName = name.parse().map_err(err)?;
    let mut spec = SyntheticSpec::standard(name, seed);
    spec.n_train = n_train.unwrap_or(spec.n_train);
    spec.n_test = n_test.unwrap_or(spec.n_test);
    spec.noise_on = noise;
    let (train, test) = datagen::generate(&spec).map_err(err)?;
    Ok((PyDataset { inner: train }, PyDataset { inner: test }))
}

/// `(train, test, sha256)` for a manifest, split by `split_seed` unless it
/// declares an official test set.
#[pyfunction]
#[pyo3(signature = (path, split_seed=0))]
fn load_manifest(path: PathBuf, split_seed: u64) -> PyResult<(PyDataset, PyDataset, String)> {
    let m = DatasetManifest::from_file(&path).map_err(err)?;
    let p = ingest::prepare(&m, split_seed).map_err(err)?;
    Ok((PyDataset { inner: p.train }, PyDataset { inner: p.test }, p.content_hash))
}

#[pyfunction]
fn variance_decomposition<'py>(py: Python<'py>, samples: Vec<(f64, usize)>) -> PyResult<Bound<'py, PyDict>> {
    let d = experiments::variance_decomposition(&samples).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("total", d.total)?;
    out.set_item("within", d.within)?;
    out.set_item("between", d.between)?;
    out.set_item("group_sizes", d.group_sizes.into_iter().collect::<Vec<_>>())?;
    Ok(out)
}

fn records_to_py<'py>(py: Python<'py>, records: &[MetricRecord]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    records
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("dataset", &r.dataset)?;
            d.set_item("type", &r.kind)?;
            d.set_item("metric", &r.metric)?;
            d.set_item("OOB", r.oob_value)?;
            d.set_item("SB_OOB", r.sb_oob_value)?;
            d.set_item("diff", r.diff)?;
            Ok(d)
        })
        .collect()
}

/// Records of one experiment ("exp1".."exp5", "vardecomp") on a fixed
/// train/test pair, both schemes built from `seed`.
#[pyfunction]
#[pyo3(signature = (experiment, train, test, seed=1, B=100, rho=DEFAULT_RHO, M=10, real=true))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    experiment: &str,
    train: &PyDataset,
    test: &PyDataset,
    seed: u64,
    B: usize,
    rho: f64,
    M: usize,
    real: bool,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let kind: ExperimentKind = experiment.parse().map_err(err)?;
    let (train, test) = (&train.inner, &test.inner);
    let task = train.task();
    if !kind.supports(task) {
        return Err(PyValueError::new_err(format!("{kind} does not apply to {}", task_name(task))));
    }
    let dkind = if real { DatasetKind::Real } else { DatasetKind::Synthetic };
    let label = kind.type_label(dkind, task);
    let name = train.name().to_string();
    let hp = TreeHyperparams::standard(task);
    let records = py
        .detach(|| -> seqboot::Result<Vec<MetricRecord>> {
            if kind == ExperimentKind::Exp4 {
                let source = DataSource::Fixed { train: train.clone(), test: test.clone() };
                let cfg = Exp4Config { repetitions: M, replicate_count: B, rho, seed, hp };
                return experiments::run_exp4(&name, label, &source, &cfg);
            }
            let pair = SchemePair::fit(train, seed, B, rho, &hp)?;
            match kind {
                ExperimentKind::Exp1 => experiments::run_exp1(&name, label, test, &pair),
                ExperimentKind::Exp2 => experiments::run_exp2(&name, label, train, test, &pair),
                ExperimentKind::Exp3 => experiments::run_exp3(&name, label, test, &pair),
                ExperimentKind::Exp5 => experiments::run_exp5(&name, label, train, test, &pair, &hp),
                _ => experiments::run_vardecomp(&name, label, train, test, &pair, Default::default()),
            }
        })
        .map_err(err)?;
    records_to_py(py, &records)
}

/// Runs the suite and writes result tables into `out`. Returns
/// `{"exit_code", "files", "failures"}`.
#[pyfunction]
#[pyo3(signature = (out, experiments=None, seeds=None, datasets=None, B=100, rho=DEFAULT_RHO, M=10,
                    split_seed=0, workers=None, n_train=None, n_test=None, markdown=false, manifest_dir=None))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    out: PathBuf,
    experiments: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
    datasets: Option<Vec<String>>,
    B: usize,
    rho: f64,
    M: usize,
    split_seed: u64,
    workers: Option<usize>,
    n_train: Option<usize>,
    n_test: Option<usize>,
    markdown: bool,
    manifest_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = RunConfig {
        replicate_count: B,
        rho,
        repetitions: M,
        output: out,
        format: if markdown { OutputFormat::Markdown } else { OutputFormat::Csv },
        workers,
        split_seed,
        ..RunConfig::default()
    };
    if let Some(e) = experiments {
        config.experiments = e.iter().map(|s| s.parse()).collect::<seqboot::Result<_>>().map_err(err)?;
    }
    if let Some(s) = seeds {
        config.seeds = s;
    }
    if let Some(d) = datasets {
        config.datasets = d
            .iter()
            .map(|s| DatasetSource::resolve(s, manifest_dir.as_deref()))
            .collect::<seqboot::Result<_>>()
            .map_err(err)?;
    }
    config.synthetic_sizes = match (n_train, n_test) {
        (None, None) => None,
        (Some(a), Some(b)) => Some((a, b)),
        _ => return Err(PyValueError::new_err("n_train and n_test must be given together")),
    };
    let outcome = py.detach(|| harness::run(&config)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("exit_code", outcome.exit_code())?;
    d.set_item(
        "files",
        outcome.files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "failures",
        outcome
            .failures
            .iter()
            .map(|f| (f.seed, f.dataset.clone(), f.message.clone()))
            .collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Markdown summary with cross-seed sign consistency for a result directory.
#[pyfunction]
fn report(dir: PathBuf) -> PyResult<String> {
    seqboot::report::report(&dir).map_err(err)
}

#[pymodule]
fn pyseqboot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_function(wrap_pyfunction!(fit_bagged, m)?)?;
    m.add_function(wrap_pyfunction!(target_distinct, m)?)?;
    m.add_function(wrap_pyfunction!(classical_resample, m)?)?;
    m.add_function(wrap_pyfunction!(sequential_resample, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(load_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(variance_decomposition, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add("DEFAULT_RHO", DEFAULT_RHO)?;
    Ok(())
}
