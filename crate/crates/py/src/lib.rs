//! Python bindings: scenarios, runs, reports, graphs and rule parsing.

use std::path::{Path, PathBuf};

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError};
use pyo3::prelude::*;

use urbanedge_core::bench::{build_report, MetricsReport};
use urbanedge_core::cli::{cmd_calibrate, cmd_run};
use urbanedge_core::edge::PipelineKind;
use urbanedge_core::kg::{self, KnowledgeGraph, Seed};
use urbanedge_core::rules::parse_rules_from;
use urbanedge_core::scenario::{self, ConfigError as CoreConfigError, ScenarioConfig, ScenarioError, ScenarioRun};
use urbanedge_core::sensorgen::write_csv;

create_exception!(urbanedge, ConfigError, PyException, "Invalid scenario configuration.");
create_exception!(urbanedge, RuleError, PyException, "Rule text failed to parse or validate.");
create_exception!(urbanedge, QueryError, PyException, "Malformed or ill-typed graph query.");

fn config_err(e: CoreConfigError) -> PyErr {
    ConfigError::new_err(e.to_string())
}

fn scenario_err(e: ScenarioError) -> PyErr {
    if e.is_rule_error() {
        return RuleError::new_err(e.to_string());
    }
    match e {
        ScenarioError::Config(c) => config_err(c),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn kind(name: &str) -> PyResult<PipelineKind> {
    name.parse().map_err(ConfigError::new_err)
}

/// A scenario configuration.
#[pyclass(module = "urbanedge")]
pub struct Scenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl Scenario {
    /// Defaults, or the scenario file at `path`.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<PathBuf>) -> PyResult<Self> {
        let inner = match path {
            Some(p) => ScenarioConfig::load(&p).map_err(config_err)?,
            None => ScenarioConfig::default(),
        };
        Ok(Self { inner })
    }

    /// Parses scenario TOML; relative paths resolve against `base`.
    #[staticmethod]
    #[pyo3(signature = (text, base=None))]
    fn from_toml(text: &str, base: Option<PathBuf>) -> PyResult<Self> {
        let base = base.unwrap_or_else(|| PathBuf::from("."));
        let inner = ScenarioConfig::parse(text, Path::new("<string>"), &base).map_err(config_err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> PyResult<String> {
        toml::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn count(&self) -> usize {
        self.inner.dataset.count
    }

    #[setter]
    fn set_count(&mut self, n: usize) {
        self.inner.dataset.count = n;
    }

    #[getter]
    fn output(&self) -> PathBuf {
        self.inner.output.clone()
    }

    #[setter]
    fn set_output(&mut self, p: PathBuf) {
        self.inner.output = p;
    }

    #[getter]
    fn pipelines(&self) -> Vec<String> {
        self.inner.pipelines.iter().map(|p| p.name().to_string()).collect()
    }

    #[setter]
    fn set_pipelines(&mut self, names: Vec<String>) -> PyResult<()> {
        let kinds = names.iter().map(|n| kind(n)).collect::<PyResult<Vec<_>>>()?;
        self.inner.pipelines = kinds;
        self.inner.validate().map_err(config_err)
    }

    /// Generates and labels the dataset.
    fn generate(&self) -> PyResult<Dataset> {
        let p = scenario::prepare(&self.inner).map_err(scenario_err)?;
        Ok(Dataset { inner: p })
    }

    /// Runs the selected pipelines in memory.
    fn run(&self) -> PyResult<Run> {
        let run = scenario::run_scenario(&self.inner).map_err(scenario_err)?;
        let report = build_report(&self.inner, &run);
        Ok(Run { run, report })
    }

    /// Runs and writes every artifact to the output directory; returns the
    /// written paths.
    #[pyo3(signature = (sweep=false))]
    fn run_to_disk(&self, sweep: bool) -> PyResult<Vec<PathBuf>> {
        let mut sink = Vec::new();
        let out = cmd_run(&self.inner, sweep, &mut sink).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(out.files)
    }

    /// Accounting coefficients calibrated on the centralized run.
    fn calibrate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let mut sink = Vec::new();
        let m = cmd_calibrate(&self.inner, &mut sink).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        to_py(py, &m)
    }
}

/// Generated readings with their labels.
#[pyclass(module = "urbanedge")]
pub struct Dataset {
    inner: scenario::Prepared,
}

#[pymethods]
impl Dataset {
    fn __len__(&self) -> usize {
        self.inner.dataset.readings.len()
    }

    /// `(t, location, category, value, label)` per reading.
    fn readings(&self) -> Vec<(u64, u32, String, Option<f64>, Option<String>)> {
        self.inner
            .dataset
            .readings
            .iter()
            .map(|r| {
                (
                    r.t,
                    r.location,
                    r.kind.name().to_string(),
                    r.value,
                    r.label.map(|l| l.kind.name().to_string()),
                )
            })
            .collect()
    }

    #[getter]
    fn labeled(&self) -> usize {
        self.inner.mask.iter().filter(|m| **m == Some(true)).count()
    }

    fn to_csv(&self, path: PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&path)?;
        write_csv(&self.inner.dataset.readings, std::io::BufWriter::new(f))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// The outcome of an in-memory scenario run.
#[pyclass(module = "urbanedge")]
pub struct Run {
    run: ScenarioRun,
    report: MetricsReport,
}

#[pymethods]
impl Run {
    /// The metrics report as nested dicts.
    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.report)
    }

    fn report_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Detection scores of one pipeline.
    fn detection(&self, py: Python<'_>, pipeline: &str) -> PyResult<Py<PyAny>> {
        let k = kind(pipeline)?;
        let r = self
            .run
            .get(k)
            .ok_or_else(|| ConfigError::new_err(format!("pipeline {pipeline} was not run")))?;
        to_py(py, &r.detection)
    }

    /// The knowledge graph built from one pipeline's deliveries.
    fn graph(&self, pipeline: &str) -> PyResult<Graph> {
        let k = kind(pipeline)?;
        let r = self
            .run
            .get(k)
            .ok_or_else(|| ConfigError::new_err(format!("pipeline {pipeline} was not run")))?;
        Ok(Graph { inner: r.graph.clone() })
    }

    /// One pipeline's decision log as dicts.
    fn decisions(&self, py: Python<'_>, pipeline: &str) -> PyResult<Py<PyAny>> {
        let k = kind(pipeline)?;
        let r = self
            .run
            .get(k)
            .ok_or_else(|| ConfigError::new_err(format!("pipeline {pipeline} was not run")))?;
        to_py(py, &r.run.decisions)
    }
}

/// An in-memory knowledge graph.
#[pyclass(module = "urbanedge")]
pub struct Graph {
    inner: KnowledgeGraph,
}

#[pymethods]
impl Graph {
    /// An empty graph holding only the bundled seed facts.
    #[new]
    fn new() -> PyResult<Self> {
        let inner = KnowledgeGraph::from_seed(&Seed::default_seed()).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    /// Reads an N-Triples export under the bundled ontology.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)?;
        let inner = kg::parse_ntriples(&text, &Seed::default_seed().ontology)
            .map_err(|e| PyRuntimeError::new_err(format!("{}: {e}", path.display())))?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Runs a query and returns one rendered result per element.
    fn query(&self, text: &str) -> PyResult<Vec<String>> {
        let q = kg::parse_query(text).map_err(|e| QueryError::new_err(e.to_string()))?;
        let out = kg::run_query(self.inner.state(), &q).map_err(|e| QueryError::new_err(e.to_string()))?;
        Ok(out.render().lines().map(str::to_string).collect())
    }

    /// `(predicate, object)` pairs leaving `entity`.
    fn lookup(&self, entity: &str) -> Vec<(String, String)> {
        self.inner
            .state()
            .lookup(entity)
            .into_iter()
            .map(|t| (t.predicate, t.object.to_string()))
            .collect()
    }

    fn export(&self, path: PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&path)?;
        kg::write_ntriples(self.inner.state(), std::io::BufWriter::new(f))?;
        Ok(())
    }
}

/// Parses rule text and returns each rule in canonical form.
#[pyfunction]
fn parse_rules(text: &str) -> PyResult<Vec<String>> {
    let rules = parse_rules_from(text, "python").map_err(|e| RuleError::new_err(e.to_string()))?;
    Ok(rules.iter().map(|r| r.to_string()).collect())
}

/// Runs the command line with `args` (without the program name); returns the
/// exit code.
#[pyfunction]
fn main(args: Vec<String>) -> i32 {
    urbanedge_core::cli::main_with(std::iter::once("urbanedge".to_string()).chain(args))
}

#[pymodule]
fn urbanedge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<Run>()?;
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(parse_rules, m)?)?;
    m.add_function(wrap_pyfunction!(main, m)?)?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("RuleError", m.py().get_type::<RuleError>())?;
    m.add("QueryError", m.py().get_type::<QueryError>())?;
    m.add("PIPELINES", PipelineKind::ALL.iter().map(|p| p.name()).collect::<Vec<_>>())?;
    Ok(())
}
