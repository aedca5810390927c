//! Python bindings: the partition, reputation rules, inequality metrics, a
//! step-by-step simulation and the experiment drivers.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use fuzzychain::consensus;
use fuzzychain::harness::{self, ExperimentConfig, ExperimentKind, HarnessError};
use fuzzychain::metrics;
use fuzzychain::registry::{self, Outcome};
use fuzzychain::{Granularity, ReputationParams};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn harness_err(e: HarnessError) -> PyErr {
    if e.is_config() {
        value_err(e)
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Converts through JSON so nested records arrive as plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn params(eta: f64, l: u32, epsilon: f64) -> PyResult<ReputationParams> {
    let p = ReputationParams { eta, l_divisor: l, epsilon };
    p.validate().map_err(value_err)?;
    Ok(p)
}

/// Odd-sized triangular partition of `[lo, hi]` with evenly spaced peaks.
#[pyclass(name = "LinguisticVariable", module = "fuzzychain_py", frozen)]
struct PyLinguisticVariable {
    inner: fuzzychain::LinguisticVariable,
}

#[pymethods]
impl PyLinguisticVariable {
    #[new]
    #[pyo3(signature = (labels, lo, hi, name = "stake"))]
    fn new(labels: Vec<String>, lo: f64, hi: f64, name: &str) -> PyResult<Self> {
        let inner = fuzzychain::LinguisticVariable::uniform(name, labels, lo, hi).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Partition from explicit `(a, b, c)` triangles.
    #[staticmethod]
    #[pyo3(signature = (labels, lo, hi, triples, name = "stake"))]
    fn from_triples(labels: Vec<String>, lo: f64, hi: f64, triples: Vec<(f64, f64, f64)>, name: &str) -> PyResult<Self> {
        let inner =
            fuzzychain::LinguisticVariable::from_functions(name, labels, lo, hi, &triples).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn peaks(&self) -> Vec<f64> {
        self.inner.peaks()
    }

    fn degrees(&self, x: f64) -> Vec<f64> {
        self.inner.degrees(x)
    }

    /// `(label, degree)` of the highest membership; `x` must lie in the universe.
    fn hmdf(&self, x: f64) -> PyResult<(String, f64)> {
        let a = self.inner.hmdf(x).map_err(value_err)?;
        Ok((self.inner.label(a.label_index).to_string(), a.degree))
    }

    /// Like `hmdf` but clamps stakes outside the universe first.
    fn classify(&self, stake: f64) -> (String, f64) {
        let a = self.inner.classify(stake);
        (self.inner.label(a.label_index).to_string(), a.degree)
    }

    fn dominant_interval(&self, index: usize) -> PyResult<(f64, f64)> {
        if index >= self.inner.len() {
            return Err(value_err(format!("label index {index} out of range")));
        }
        Ok(self.inner.dominant_interval(index))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "LinguisticVariable({:?}, labels={:?}, lo={}, hi={})",
            self.inner.name(),
            self.inner.labels(),
            self.inner.lo(),
            self.inner.hi()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (reputation, successful, eta = 0.1, l = 20, epsilon = 0.25))]
fn update_reputation(reputation: f64, successful: bool, eta: f64, l: u32, epsilon: f64) -> PyResult<f64> {
    let outcome = if successful { Outcome::Successful } else { Outcome::Unsuccessful };
    Ok(registry::update_reputation(reputation, outcome, &params(eta, l, epsilon)?))
}

#[pyfunction]
fn expulsion_rate(reputation: f64) -> f64 {
    registry::expulsion_rate(reputation)
}

#[pyfunction]
fn trusted_sets_required(label_count: usize) -> PyResult<usize> {
    consensus::trusted_sets_required(label_count).map_err(value_err)
}

#[pyfunction]
fn gini(values: Vec<f64>) -> PyResult<f64> {
    metrics::gini(&values).map_err(value_err)
}

#[pyfunction]
fn skewness(values: Vec<f64>) -> PyResult<f64> {
    metrics::skewness(&values).map_err(value_err)
}

/// Excess kurtosis.
#[pyfunction]
fn kurtosis(values: Vec<f64>) -> PyResult<f64> {
    metrics::kurtosis(&values).map_err(value_err)
}

fn experiment_kind(kind: &str) -> PyResult<ExperimentKind> {
    match kind {
        "exp1" => Ok(ExperimentKind::Exp1),
        "exp2" => Ok(ExperimentKind::Exp2),
        "custom" => Ok(ExperimentKind::Custom),
        other => Err(value_err(format!("unknown experiment {other:?}; expected exp1, exp2 or custom"))),
    }
}

/// Defaults for `kind` when no TOML document is given; otherwise the
/// document, with `kind` overriding its experiment field.
fn load_config(kind: Option<&str>, config: Option<&str>) -> PyResult<ExperimentConfig> {
    let kind = kind.map(experiment_kind).transpose()?;
    match config {
        Some(text) => {
            let mut cfg = ExperimentConfig::from_toml(text).map_err(value_err)?;
            if let Some(k) = kind {
                cfg.experiment = k;
            }
            Ok(cfg)
        }
        None => Ok(match kind.unwrap_or(ExperimentKind::Exp1) {
            ExperimentKind::Exp2 => ExperimentConfig::exp2(),
            ExperimentKind::Exp1 => ExperimentConfig::exp1(),
            ExperimentKind::Custom => ExperimentConfig { experiment: ExperimentKind::Custom, ..ExperimentConfig::exp1() },
        }),
    }
}

/// One consensus population advanced round by round.
#[pyclass(name = "Simulation", module = "fuzzychain_py")]
struct PySimulation {
    inner: harness::Simulation,
}

#[pymethods]
impl PySimulation {
    /// `config` is a TOML document; the exp1 defaults apply when omitted.
    #[new]
    #[pyo3(signature = (config = None, seed = None, byzantine_rate = None, invalid_block_rate = None))]
    fn new(
        config: Option<&str>,
        seed: Option<u64>,
        byzantine_rate: Option<f64>,
        invalid_block_rate: Option<f64>,
    ) -> PyResult<Self> {
        let mut cfg = load_config(None, config)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(b) = byzantine_rate {
            cfg.byzantine_rate = b;
        }
        if let Some(r) = invalid_block_rate {
            cfg.invalid_block_rate = r;
        }
        cfg.validate().map_err(value_err)?;
        let engine = cfg.engine().map_err(value_err)?;
        let inner = harness::Simulation::new(&cfg, engine, &[0]).map_err(harness_err)?;
        Ok(Self { inner })
    }

    /// Runs one round and returns its outcome record.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let outcome = self.inner.step().map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        to_py(py, &outcome)
    }

    /// Runs `rounds` rounds and returns the winners' label counts so far.
    fn run(&mut self, py: Python<'_>, rounds: u64) -> PyResult<Vec<(String, u64)>> {
        let sim = &mut self.inner;
        py.detach(|| {
            for _ in 0..rounds {
                sim.step().map_err(|e| e.to_string())?;
            }
            Ok::<_, String>(())
        })
        .map_err(PyRuntimeError::new_err)?;
        Ok(self.label_counts())
    }

    #[getter]
    fn round(&self) -> u64 {
        self.inner.rounds_run()
    }

    #[getter]
    fn chain_length(&self) -> usize {
        self.inner.chain().len()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.engine().var.labels().to_vec()
    }

    fn label_counts(&self) -> Vec<(String, u64)> {
        self.inner.label_counts().entries.clone()
    }

    /// Per-label active validator counts.
    fn census(&self) -> Vec<usize> {
        self.inner.registry().census(self.inner.engine().var.len())
    }

    fn validators<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.registry().snapshot().validators)
    }

    /// Re-validates the whole chain from genesis.
    fn verify_chain(&self) -> PyResult<()> {
        self.inner.chain().verify().map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn chain_json(&self) -> PyResult<String> {
        self.inner.chain().to_json().map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = self.inner.label_counts().metrics().map_err(value_err)?;
        to_py(py, &report)
    }
}

/// Runs an experiment and returns the summary as a dict. With `out`, the
/// result files are also written to that directory.
#[pyfunction]
#[pyo3(signature = (kind = None, config = None, seed = None, rounds = None, repetitions = None, granularity = None, out = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    kind: Option<&str>,
    config: Option<&str>,
    seed: Option<u64>,
    rounds: Option<Vec<u64>>,
    repetitions: Option<u32>,
    granularity: Option<&str>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = load_config(kind, config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = rounds {
        cfg.rounds = r;
    }
    if let Some(r) = repetitions {
        cfg.repetitions = r;
    }
    if let Some(g) = granularity {
        cfg.granularity = g.parse::<Granularity>().map_err(value_err)?;
    }
    let report = py.detach(|| harness::run(&cfg)).map_err(harness_err)?;
    if let Some(dir) = out {
        harness::emit_outputs(&report, &dir).map_err(harness_err)?;
    }
    to_py(py, &harness::Summary::of(&report))
}

/// Frequency tables as `[{algorithm, rounds, repetition, table}]`.
#[pyfunction]
fn read_frequencies<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let tables = harness::read_frequencies(&path).map_err(harness_err)?;
    to_py(py, &tables)
}

#[pymodule]
fn fuzzychain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLinguisticVariable>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(update_reputation, m)?)?;
    m.add_function(wrap_pyfunction!(expulsion_rate, m)?)?;
    m.add_function(wrap_pyfunction!(trusted_sets_required, m)?)?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(skewness, m)?)?;
    m.add_function(wrap_pyfunction!(kurtosis, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(read_frequencies, m)?)?;
    Ok(())
}
