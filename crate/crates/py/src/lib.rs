//! Python bindings. Reports and schedules come back as plain dicts and
//! lists.

use std::fmt::Display;

use dagrta::carryout::{
    brute_force_oracle, build_model, carry_out_bound, export_model, solve_exact, ExportFormat, ModelOptions,
};
use dagrta::experiment::{run_experiment, to_csv, ExperimentSpec};
use dagrta::io::{taskset_from_json, taskset_to_json};
use dagrta::rta::{schedulability_test, Method};
use dagrta::sim::{simulate, ExecPolicy, ReleasePolicy, SimConfig};
use dagrta::taskgen::{assign_priorities_dm, gen_taskset, rng_from_seed, GenConfig};
use dagrta::workload::{carry_in_workload, dga_workload, mbb_workload};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Hands a serializable value to Python through `json.loads`.
fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

pub fn parse_method(name: &str) -> PyResult<Method> {
    name.parse().map_err(value_error)
}

pub fn parse_release(name: &str) -> PyResult<ReleasePolicy> {
    match name {
        "periodic" => Ok(ReleasePolicy::Periodic),
        "sporadic" => Ok(ReleasePolicy::Sporadic),
        _ => Err(value_error(format!("unknown release policy {name:?}"))),
    }
}

pub fn parse_exec(name: &str) -> PyResult<ExecPolicy> {
    match name {
        "full_wcet" => Ok(ExecPolicy::FullWcet),
        "uniform" => Ok(ExecPolicy::Uniform),
        _ => Err(value_error(format!("unknown exec policy {name:?}"))),
    }
}

#[pyclass(frozen, from_py_object, name = "Dag")]
#[derive(Clone)]
pub struct PyDag(pub dagrta::Dag);

#[pymethods]
impl PyDag {
    #[new]
    #[pyo3(signature = (wcets, edges = Vec::new()))]
    fn new(wcets: Vec<u64>, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        dagrta::Dag::new(&wcets, &edges).map(Self).map_err(value_error)
    }

    #[getter]
    fn work(&self) -> u64 {
        self.0.work()
    }

    #[getter]
    fn span(&self) -> u64 {
        self.0.span()
    }

    #[getter]
    fn wcets(&self) -> Vec<u64> {
        self.0.wcets()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Exact carry-out workload for a window of `delta`, unlimited processors.
    fn carry_out(&self, delta: u64) -> PyResult<u64> {
        let model = build_model(&self.0, delta, ModelOptions::default()).map_err(value_error)?;
        Ok(solve_exact(&model).map_err(value_error)?.objective)
    }

    /// Exhaustive reference value of `carry_out`, for small graphs.
    fn carry_out_oracle(&self, delta: u64) -> PyResult<u64> {
        brute_force_oracle(&self.0, delta).map_err(value_error)
    }

    /// Carry-out model as LP or MPS text.
    #[pyo3(signature = (delta, format = "lp"))]
    fn export_model(&self, delta: u64, format: &str) -> PyResult<String> {
        let format: ExportFormat = format.parse().map_err(value_error)?;
        let model = build_model(&self.0, delta, ModelOptions::default()).map_err(value_error)?;
        Ok(export_model(&model, format))
    }

    fn __repr__(&self) -> String {
        format!(
            "Dag(n={}, work={}, span={})",
            self.0.len(),
            self.0.work(),
            self.0.span()
        )
    }
}

#[pyclass(frozen, from_py_object, name = "DagTask")]
#[derive(Clone)]
pub struct PyDagTask(pub dagrta::DagTask);

#[pymethods]
impl PyDagTask {
    #[new]
    fn new(dag: &PyDag, deadline: u64, period: u64) -> PyResult<Self> {
        dagrta::DagTask::new(dag.0.clone(), deadline, period)
            .map(Self)
            .map_err(value_error)
    }

    #[getter]
    fn dag(&self) -> PyDag {
        PyDag(self.0.dag().clone())
    }

    #[getter]
    fn work(&self) -> u64 {
        self.0.work()
    }

    #[getter]
    fn span(&self) -> u64 {
        self.0.span()
    }

    #[getter]
    fn deadline(&self) -> u64 {
        self.0.deadline()
    }

    #[getter]
    fn period(&self) -> u64 {
        self.0.period()
    }

    #[getter]
    fn utilization(&self) -> f64 {
        self.0.utilization()
    }

    /// Carry-out bound on `m` processors.
    fn carry_out(&self, delta: u64, m: u64) -> PyResult<u64> {
        carry_out_bound(&self.0, delta, m).map_err(value_error)
    }

    fn carry_in(&self, ci: u64) -> u64 {
        carry_in_workload(&self.0, ci)
    }

    /// Interfering workload over a window of `delta` given this task's
    /// response bound `r`.
    #[pyo3(signature = (delta, r, m, method = "DGA"))]
    fn workload(&self, delta: u64, r: u64, m: u64, method: &str) -> PyResult<u64> {
        match parse_method(method)? {
            Method::Dga => dga_workload(&self.0, delta, r, m).map_err(value_error),
            Method::Mbb => Ok(mbb_workload(&self.0, delta, r, m)),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "DagTask(work={}, span={}, deadline={}, period={})",
            self.0.work(),
            self.0.span(),
            self.0.deadline(),
            self.0.period()
        )
    }
}

#[pyclass(frozen, from_py_object, name = "TaskSet")]
#[derive(Clone)]
pub struct PyTaskSet(pub dagrta::TaskSet);

#[pymethods]
impl PyTaskSet {
    /// Tasks in priority order, highest first.
    #[new]
    fn new(tasks: Vec<PyDagTask>, processors: u64) -> PyResult<Self> {
        let tasks = tasks.into_iter().map(|t| t.0).collect();
        dagrta::TaskSet::new(tasks, processors).map(Self).map_err(value_error)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        taskset_from_json(text).map(Self).map_err(value_error)
    }

    fn to_json(&self) -> String {
        taskset_to_json(&self.0)
    }

    #[getter]
    fn tasks(&self) -> Vec<PyDagTask> {
        self.0.tasks.iter().cloned().map(PyDagTask).collect()
    }

    #[getter]
    fn processors(&self) -> u64 {
        self.0.processors
    }

    #[getter]
    fn utilization(&self) -> f64 {
        self.0.utilization()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Schedulability report as a dict.
    #[pyo3(signature = (method = "DGA"))]
    fn analyze<'py>(&self, py: Python<'py>, method: &str) -> PyResult<Bound<'py, PyAny>> {
        let method = parse_method(method)?;
        let report = py
            .detach(|| schedulability_test(&self.0, method))
            .map_err(value_error)?;
        to_py(py, &report)
    }

    /// Simulated jobs as a list of dicts.
    #[pyo3(signature = (horizon = None, release = "periodic", exec = "full_wcet", seed = 0))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        horizon: Option<u64>,
        release: &str,
        exec: &str,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let config = SimConfig {
            horizon: horizon.unwrap_or(3 * self.0.max_period()),
            release: parse_release(release)?,
            exec: parse_exec(exec)?,
        };
        let result = simulate(&self.0, &config, &mut rng_from_seed(seed)).map_err(value_error)?;
        to_py(py, &result.jobs)
    }

    fn __repr__(&self) -> String {
        format!("TaskSet(tasks={}, processors={})", self.0.len(), self.0.processors)
    }
}

/// Random task set, sorted deadline-monotonic. `config` is a generator
/// JSON object; missing fields take the small-graph defaults.
#[pyfunction]
#[pyo3(signature = (utilization, processors, seed = 0, config = None))]
fn generate_taskset(utilization: f64, processors: u64, seed: u64, config: Option<&str>) -> PyResult<PyTaskSet> {
    let cfg = match config {
        Some(text) => {
            let mut value: serde_json::Value = serde_json::from_str(text).map_err(value_error)?;
            let mut base = serde_json::to_value(GenConfig::desk()).map_err(value_error)?;
            if let (Some(base), Some(over)) = (base.as_object_mut(), value.as_object_mut()) {
                base.append(over);
            }
            serde_json::from_value(base).map_err(value_error)?
        }
        None => GenConfig::desk(),
    };
    let ts = gen_taskset(utilization, processors, &cfg, &mut rng_from_seed(seed)).map_err(value_error)?;
    Ok(PyTaskSet(assign_priorities_dm(ts)))
}

/// Runs a sweep given as experiment-spec JSON and returns the CSV text.
#[pyfunction]
fn run_sweep(py: Python<'_>, spec: &str) -> PyResult<String> {
    let spec: ExperimentSpec = serde_json::from_str(spec).map_err(value_error)?;
    let rows = py.detach(|| run_experiment(&spec)).map_err(value_error)?;
    Ok(to_csv(&rows))
}

/// Adds the classes and functions to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDag>()?;
    m.add_class::<PyDagTask>()?;
    m.add_class::<PyTaskSet>()?;
    m.add_function(wrap_pyfunction!(generate_taskset, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}

#[pymodule]
fn dagrta_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
