//! Python bindings: experiment configs and runs, the acceptance suite, law
//! search, and the two Gaussian schemes as single-shot operations.

use std::path::{Path, PathBuf};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sideinfo::dirty_paper::{derive_params, run_episode, GaussianFbParams};
use sideinfo::harness::acceptance::{AcceptOptions, Acceptance, DEFAULT_SEED};
use sideinfo::harness::config::Scheme;
use sideinfo::harness::{run_experiment, schema, ExperimentConfig, Params};
use sideinfo::info::{parse_law, search_gp, search_wz, write_gp_law, write_wz_law, GridSpec, LawFile};
use sideinfo::wz_gaussian::{wz_decode, wz_encode, CellIndex, FfQuantizerSpec};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(value_err)
}

/// An experiment: scheme, parameters, trial count, seed and optional sweep.
#[pyclass(name = "Experiment", module = "sideinfo_py")]
struct PyExperiment {
    inner: ExperimentConfig,
    base: PathBuf,
}

#[pymethods]
impl PyExperiment {
    #[new]
    #[pyo3(signature = (scheme, trials = 1000, seed = 0))]
    fn new(scheme: &str, trials: usize, seed: u64) -> PyResult<Self> {
        let params = Params::defaults(parse_scheme(scheme)?);
        Ok(PyExperiment {
            inner: ExperimentConfig::new(params, trials, seed),
            base: PathBuf::from("."),
        })
    }

    /// Parse config text. Law paths resolve against `base_dir`.
    #[staticmethod]
    #[pyo3(signature = (text, base_dir = "."))]
    fn from_text(text: &str, base_dir: &str) -> PyResult<Self> {
        Ok(PyExperiment {
            inner: ExperimentConfig::parse(text, Path::new(base_dir)).map_err(value_err)?,
            base: PathBuf::from(base_dir),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(PyExperiment {
            inner: ExperimentConfig::load(&path).map_err(value_err)?,
            base,
        })
    }

    /// Set one scheme parameter, given as it would appear in a config file.
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let text = value.str()?.to_string();
        self.inner.params.set(key, &text, &self.base).map_err(value_err)
    }

    fn sweep(&mut self, axis: &str, values: Vec<f64>) -> PyResult<()> {
        self.inner = self.inner.clone().with_sweep(axis, values).map_err(value_err)?;
        Ok(())
    }

    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme().name()
    }

    #[getter]
    fn trials(&self) -> usize {
        self.inner.trials
    }

    #[setter]
    fn set_trials(&mut self, trials: usize) {
        self.inner.trials = trials;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    fn columns(&self) -> Vec<&'static str> {
        schema(self.inner.scheme()).to_vec()
    }

    /// Config text that parses back to this experiment.
    fn render(&self) -> String {
        self.inner.render()
    }

    /// One dict per sweep point with `axis`, `value`, `trials` and the
    /// scheme's columns. Releases the GIL while trials run.
    fn run<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let cfg = self.inner.clone();
        let rows = py.detach(move || run_experiment(&cfg)).map_err(value_err)?;
        let columns = schema(self.inner.scheme());
        rows.iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("axis", r.axis.clone())?;
                d.set_item("value", r.value)?;
                d.set_item("trials", r.trials)?;
                for (name, v) in columns.iter().zip(&r.fields) {
                    d.set_item(*name, *v)?;
                }
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Experiment(scheme={:?}, trials={}, seed={})",
            self.scheme(),
            self.inner.trials,
            self.inner.seed
        )
    }
}

/// Feedback scheme for a Gaussian channel with interference known to the
/// encoder.
#[pyclass(name = "GaussianFeedback", module = "sideinfo_py")]
struct PyGaussianFeedback {
    inner: GaussianFbParams,
}

#[pymethods]
impl PyGaussianFeedback {
    #[new]
    #[pyo3(signature = (power, noise_var, n, rate, interference_var = 0.0))]
    fn new(power: f64, noise_var: f64, n: usize, rate: f64, interference_var: f64) -> PyResult<Self> {
        let inner = derive_params(power, noise_var, n, rate)
            .and_then(|p| p.with_interference_var(interference_var))
            .map_err(value_err)?;
        Ok(PyGaussianFeedback { inner })
    }

    #[getter]
    fn num_messages(&self) -> u64 {
        self.inner.num_messages
    }

    #[getter]
    fn capacity(&self) -> f64 {
        self.inner.capacity()
    }

    #[getter]
    fn final_error_variance(&self) -> f64 {
        self.inner.final_error_variance()
    }

    /// Send `message` through `n` channel uses with the given interference
    /// and noise samples.
    fn episode<'py>(
        &self,
        py: Python<'py>,
        message: u64,
        interference: Vec<f64>,
        noise: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let t = run_episode(&self.inner, message, &interference, &noise).map_err(value_err)?;
        let d = PyDict::new(py);
        d.set_item("decoded", t.decoded)?;
        d.set_item("correct", t.is_correct())?;
        d.set_item("theta", t.theta)?;
        d.set_item("final_estimate", t.final_estimate)?;
        d.set_item("estimation_error", t.estimation_error())?;
        d.set_item("inputs", t.inputs)?;
        d.set_item("outputs", t.outputs)?;
        Ok(d)
    }
}

/// Block quantizer for a Gaussian source whose past samples are fed forward
/// to the decoder.
#[pyclass(name = "FeedforwardQuantizer", module = "sideinfo_py")]
struct PyFeedforwardQuantizer {
    inner: FfQuantizerSpec,
}

#[pymethods]
impl PyFeedforwardQuantizer {
    #[new]
    #[pyo3(signature = (block_len, rate, epsilon, source_var = 1.0))]
    fn new(block_len: usize, rate: f64, epsilon: f64, source_var: f64) -> PyResult<Self> {
        let inner = FfQuantizerSpec::new(block_len, rate, epsilon, source_var).map_err(value_err)?;
        Ok(PyFeedforwardQuantizer { inner })
    }

    #[getter]
    fn levels(&self) -> u64 {
        self.inner.levels
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn limit_distortion(&self) -> f64 {
        self.inner.limit_distortion()
    }

    fn encode(&self, x: Vec<f64>) -> PyResult<u64> {
        wz_encode(&x, &self.inner).map(|c| c.0).map_err(value_err)
    }

    /// Reconstruct the block from the cell index, the side information and
    /// the fed-forward source samples.
    fn decode(&self, index: u64, y: Vec<f64>, x_feedforward: Vec<f64>) -> PyResult<Vec<f64>> {
        wz_decode(CellIndex(index), &y, &x_feedforward, &self.inner).map_err(value_err)
    }
}

#[pyfunction]
fn schemes() -> Vec<&'static str> {
    Scheme::ALL.iter().map(|s| s.name()).collect()
}

#[pyfunction]
#[pyo3(name = "schema")]
fn scheme_columns(scheme: &str) -> PyResult<Vec<&'static str>> {
    Ok(schema(parse_scheme(scheme)?).to_vec())
}

/// Grid-search the auxiliary law for a law table. Returns the objective and
/// the completed table.
#[pyfunction]
#[pyo3(signature = (table, grid_step = 0.05, aux_size = None, max_distortion = 0.1))]
fn optimize_law(
    py: Python<'_>,
    table: &str,
    grid_step: f64,
    aux_size: Option<usize>,
    max_distortion: f64,
) -> PyResult<(f64, String)> {
    let parsed = parse_law(table).map_err(value_err)?;
    py.detach(|| match parsed {
        LawFile::Gp {
            channel, aux_size: u, ..
        } => search_gp(&channel, &GridSpec::new(grid_step, aux_size.unwrap_or(u)))
            .map(|best| (best.objective, write_gp_law(&best.law))),
        LawFile::Wz {
            source, aux_size: u, ..
        } => search_wz(
            &source,
            max_distortion,
            &GridSpec::new(grid_step, aux_size.unwrap_or(u)),
        )
        .map(|best| (best.objective.rate, write_wz_law(&best.law))),
    })
    .map_err(value_err)
}

/// Run the acceptance suite. One dict per criterion.
#[pyfunction]
#[pyo3(signature = (quick = true, seed = DEFAULT_SEED))]
fn accept<'py>(py: Python<'py>, quick: bool, seed: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let results = py.detach(|| Acceptance::new(AcceptOptions { quick, seed }).run_all());
    results
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("id", r.id)?;
            d.set_item("name", r.name)?;
            d.set_item("passed", r.passed)?;
            d.set_item("detail", r.detail)?;
            d.set_item("metrics", r.metrics.into_iter().collect::<Vec<_>>())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn sideinfo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyExperiment>()?;
    m.add_class::<PyGaussianFeedback>()?;
    m.add_class::<PyFeedforwardQuantizer>()?;
    m.add_function(wrap_pyfunction!(schemes, m)?)?;
    m.add_function(wrap_pyfunction!(scheme_columns, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_law, m)?)?;
    m.add_function(wrap_pyfunction!(accept, m)?)?;
    Ok(())
}
