//! Python bindings: task registry, sampling, estimators and closed-form MI.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use mibench::benchmark::{self, EstimatorSpec, RunConfig, TaskSpec};
use mibench::numerics::Matrix;
use mibench::{distributions, Error, Sample};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::UnknownTask(id) => PyKeyError::new_err(id),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows_to_flat(rows: &[Vec<f64>], width: usize, name: &str) -> PyResult<Vec<f64>> {
    let mut flat = Vec::with_capacity(rows.len() * width);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(PyValueError::new_err(format!("{name} row {i} has {} columns, expected {width}", r.len())));
        }
        flat.extend_from_slice(r);
    }
    Ok(flat)
}

fn split_rows(s: &Sample) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = s.n_points();
    ((0..n).map(|i| s.x_row(i).to_vec()).collect(), (0..n).map(|i| s.y_row(i).to_vec()).collect())
}

/// A benchmark task with its exact mutual information (nats).
#[pyclass(name = "Task", frozen)]
struct PyTask {
    inner: TaskSpec,
}

#[pymethods]
impl PyTask {
    #[new]
    fn new(task_id: &str) -> PyResult<Self> {
        let tasks = benchmark::registry_default().map_err(to_py)?;
        let t = benchmark::find_task(&tasks, task_id).map_err(to_py)?;
        Ok(PyTask { inner: t.clone() })
    }

    #[getter]
    fn task_id(&self) -> &str {
        &self.inner.task_id
    }

    #[getter]
    fn family(&self) -> &str {
        &self.inner.family
    }

    #[getter]
    fn dim_x(&self) -> usize {
        self.inner.dim_x
    }

    #[getter]
    fn dim_y(&self) -> usize {
        self.inner.dim_y
    }

    #[getter]
    fn mi_true(&self) -> f64 {
        self.inner.mi_true
    }

    #[getter]
    fn description(&self) -> &str {
        &self.inner.description
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Draws `n` points; returns `(x_rows, y_rows)`.
    #[pyo3(signature = (n, seed_index=0, global_seed=mibench::numerics::rng::DEFAULT_SEED))]
    fn sample(&self, n: usize, seed_index: u64, global_seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let s = self.inner.sample(global_seed, seed_index, n).map_err(to_py)?;
        Ok(split_rows(&s))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Task('{}', dim_x={}, dim_y={}, mi_true={})",
            self.inner.task_id, self.inner.dim_x, self.inner.dim_y, self.inner.mi_true
        )
    }
}

/// Ids of all registry tasks, optionally restricted to a family or base law.
#[pyfunction]
#[pyo3(signature = (family=None))]
fn task_ids(family: Option<&str>) -> PyResult<Vec<String>> {
    let tasks = benchmark::registry_default().map_err(to_py)?;
    Ok(tasks
        .into_iter()
        .filter(|t| family.is_none_or(|f| t.family == f || t.base.law() == f))
        .map(|t| t.task_id)
        .collect())
}

/// Runs one estimator on paired rows. Returns `(value_nats, flags)`.
#[pyfunction]
#[pyo3(signature = (estimator, x, y, seed=0))]
fn estimate(estimator: &str, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, seed: u64) -> PyResult<(f64, Vec<String>)> {
    if x.len() != y.len() {
        return Err(PyValueError::new_err(format!("x has {} rows but y has {}", x.len(), y.len())));
    }
    let (m, n) = (x.first().map_or(0, Vec::len), y.first().map_or(0, Vec::len));
    let s = Sample::from_blocks(&rows_to_flat(&x, m, "x")?, m, &rows_to_flat(&y, n, "y")?, n).map_err(to_py)?;
    let spec = EstimatorSpec::parse(estimator).map_err(to_py)?;
    let r = spec.run(&s, seed);
    Ok((r.value, r.flags.iter().map(|f| f.as_str().to_string()).collect()))
}

/// One row of benchmark output.
#[pyclass(name = "RunRecord", frozen, get_all)]
struct PyRunRecord {
    task_id: String,
    estimator_id: String,
    seed: u64,
    n_points: usize,
    estimate: f64,
    mi_true: f64,
    rel_bias: f64,
    flags: Vec<String>,
}

#[pymethods]
impl PyRunRecord {
    fn __repr__(&self) -> String {
        format!(
            "RunRecord({}, {}, seed={}, n={}, estimate={:.4})",
            self.task_id, self.estimator_id, self.seed, self.n_points, self.estimate
        )
    }
}

#[pyfunction]
#[pyo3(signature = (tasks, estimators, seeds=10, n_points=vec![10_000], preprocess="standardize", global_seed=mibench::numerics::rng::DEFAULT_SEED))]
fn run_benchmark(
    py: Python<'_>,
    tasks: Vec<String>,
    estimators: Vec<String>,
    seeds: usize,
    n_points: Vec<usize>,
    preprocess: &str,
    global_seed: u64,
) -> PyResult<Vec<PyRunRecord>> {
    let registry = benchmark::registry_default().map_err(to_py)?;
    let specs: Vec<TaskSpec> = tasks
        .iter()
        .map(|id| benchmark::find_task(&registry, id).cloned())
        .collect::<Result<_, _>>()
        .map_err(to_py)?;
    let ests: Vec<EstimatorSpec> = estimators.iter().map(|e| EstimatorSpec::parse(e)).collect::<Result<_, _>>().map_err(to_py)?;
    let config = RunConfig {
        seeds,
        n_points,
        preprocess: benchmark::PreprocessStrategy::parse(preprocess).map_err(to_py)?,
        global_seed,
        record_wallclock: false,
        ..Default::default()
    };
    let records = py
        .detach(|| benchmark::run_benchmark(&specs, &ests, &config))
        .map_err(to_py)?;
    Ok(records
        .into_iter()
        .map(|r| PyRunRecord {
            flags: r.flags.iter().map(|f| f.as_str().to_string()).collect(),
            task_id: r.task_id,
            estimator_id: r.estimator_id,
            seed: r.seed,
            n_points: r.n_points,
            estimate: r.estimate,
            mi_true: r.mi_true,
            rel_bias: r.rel_bias,
        })
        .collect())
}

/// MI of a Gaussian with the given joint covariance (rows of a square matrix).
#[pyfunction]
fn gaussian_mi(covariance: Vec<Vec<f64>>, dim_x: usize, dim_y: usize) -> PyResult<f64> {
    let d = covariance.len();
    let flat = rows_to_flat(&covariance, d, "covariance")?;
    distributions::gaussian_mi(&Matrix::from_row_slice(d, d, &flat), dim_x, dim_y).map_err(to_py)
}

/// MI of a multivariate Student-t with identity dispersion.
#[pyfunction]
fn student_correction(dof: f64, dim_x: usize, dim_y: usize) -> PyResult<f64> {
    distributions::student_correction(dof, dim_x, dim_y).map_err(to_py)
}

#[pyfunction]
fn additive_noise_mi(epsilon: f64) -> PyResult<f64> {
    distributions::additive_noise_mi(epsilon).map_err(to_py)
}

#[pymodule]
fn mibench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTask>()?;
    m.add_class::<PyRunRecord>()?;
    m.add_function(wrap_pyfunction!(task_ids, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_mi, m)?)?;
    m.add_function(wrap_pyfunction!(student_correction, m)?)?;
    m.add_function(wrap_pyfunction!(additive_noise_mi, m)?)?;
    m.add("DEFAULT_SEED", mibench::numerics::rng::DEFAULT_SEED)?;
    Ok(())
}
