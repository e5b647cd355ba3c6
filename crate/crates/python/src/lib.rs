//! Python bindings: networks, combination rules, steady-state theory and
//! Monte-Carlo learning curves.

use std::path::{Path, PathBuf};

use diffnet::format::NetworkFile;
use diffnet::network::{random_network, validate, CombinationMatrices, NetworkModel, ProfileRanges, Slot};
use diffnet::rules::RuleSpec;
use diffnet::sim::{run_monte_carlo, SimOptions};
use diffnet::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(diffnet_py, UnstableError, PyArithmeticError);

fn to_py(err: Error) -> PyErr {
    match err {
        Error::MeanUnstable { .. }
        | Error::MeanSquareUnstable { .. }
        | Error::SeriesNotConverged { .. }
        | Error::Numerical(_) => UnstableError::new_err(err.to_string()),
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_slot(s: &str) -> PyResult<Slot> {
    diffnet::cli::parse_slot(s).map_err(to_py)
}

/// A network: topology, node profiles, link noises and target model.
#[pyclass(module = "diffnet_py", from_py_object)]
#[derive(Clone)]
pub struct Network {
    inner: NetworkModel,
}

#[pymethods]
impl Network {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: file.into_model().map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: diffnet::format::load_network(&path).map_err(to_py)? })
    }

    /// Random geometric graph in the unit square with random profiles.
    #[staticmethod]
    #[pyo3(signature = (seed, n_nodes, m_dim, radius = 0.35))]
    fn random(seed: u64, n_nodes: usize, m_dim: usize, radius: f64) -> PyResult<Self> {
        let inner = random_network(seed, n_nodes, m_dim, radius, &ProfileRanges::default()).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkFile::from_model(&self.inner)).expect("network serializes")
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        diffnet::format::save_network(&path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn m_dim(&self) -> usize {
        self.inner.m_dim
    }

    /// Undirected edges, 1-based.
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.topology.edges().into_iter().map(|(l, k)| (l + 1, k + 1)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Network(n_nodes={}, m_dim={})", self.inner.n_nodes(), self.inner.m_dim)
    }
}

/// Builds the three matrices. An adaptive A2 starts from uniform weights.
fn matrices(net: &NetworkModel, a1: &str, c: &str, a2: &str) -> PyResult<(CombinationMatrices, bool)> {
    let dir = Path::new(".");
    let build = |rule: &str, slot| -> PyResult<_> {
        let spec: RuleSpec = rule.parse().map_err(to_py)?;
        if spec.is_adaptive() && slot != Slot::A2 {
            return Err(PyValueError::new_err(format!("the adaptive rule is only available for A2, not {slot}")));
        }
        let spec = if spec.is_adaptive() { RuleSpec::Uniform } else { spec };
        spec.build(net, slot, dir).map_err(to_py)
    };
    let mats = CombinationMatrices { a1: build(a1, Slot::A1)?, c: build(c, Slot::C)?, a2: build(a2, Slot::A2)? };
    validate(net, &mats).into_result().map_err(to_py)?;
    Ok((mats, a2 == "adaptive"))
}

/// Combination matrix of `rule` for `slot` as nested lists, `[l][k]` the
/// weight node `k` gives to `l`.
#[pyfunction]
#[pyo3(signature = (network, rule, slot = "a2"))]
fn combination_matrix(network: &Network, rule: &str, slot: &str) -> PyResult<Vec<Vec<f64>>> {
    let spec: RuleSpec = rule.parse().map_err(to_py)?;
    let a = spec.build(&network.inner, parse_slot(slot)?, Path::new(".")).map_err(to_py)?;
    Ok(a.row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Steady-state report as a dict.
#[pyfunction]
#[pyo3(signature = (network, a1 = "identity", c = "identity", a2 = "identity"))]
fn analyze<'py>(py: Python<'py>, network: &Network, a1: &str, c: &str, a2: &str) -> PyResult<Bound<'py, PyAny>> {
    let (mats, adaptive) = matrices(&network.inner, a1, c, a2)?;
    if adaptive {
        return Err(PyValueError::new_err("the adaptive rule has no closed-form steady state"));
    }
    let net = network.inner.clone();
    let report = py.detach(move || diffnet::theory::analyze(&net, &mats)).map_err(to_py)?;
    json_to_py(py, &report)
}

/// Monte-Carlo learning curves. Returns a dict with per-iteration `msd` and
/// `emse` (linear), the number of runs kept and the number that diverged.
#[pyfunction]
#[pyo3(signature = (network, a1 = "identity", c = "identity", a2 = "identity", runs = 50, iterations = 2000, seed = 0, nu = 0.05))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    network: &Network,
    a1: &str,
    c: &str,
    a2: &str,
    runs: usize,
    iterations: usize,
    seed: u64,
    nu: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let (mats, adaptive) = matrices(&network.inner, a1, c, a2)?;
    let mut opts = SimOptions::new(runs, iterations, seed);
    if adaptive {
        opts.adaptive_nu = Some(nu);
    }
    let net = network.inner.clone();
    let curve = py.detach(move || run_monte_carlo(&net, &mats, &opts)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("msd", curve.msd)?;
    out.set_item("emse", curve.emse)?;
    out.set_item("runs", curve.runs)?;
    out.set_item("divergent_runs", curve.divergent_runs)?;
    Ok(out)
}

/// Writes a preset's `scenario.json` and `network.json` into `out`.
#[pyfunction]
#[pyo3(signature = (preset, seed = 1, out = PathBuf::from(".")))]
fn gen_scenario(preset: &str, seed: u64, out: PathBuf) -> PyResult<(PathBuf, PathBuf)> {
    diffnet::cli::gen_scenario(preset.parse().map_err(to_py)?, seed, &out).map_err(to_py)
}

/// Runs the command-line tool in-process and returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("diffnet".to_string()).chain(args).collect();
    py.detach(move || diffnet::cli::run(argv))
}

#[pymodule]
fn diffnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_function(wrap_pyfunction!(combination_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(gen_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("UnstableError", m.py().get_type::<UnstableError>())?;
    Ok(())
}

/// Registers the module so embedded interpreters can import it.
pub fn register() {
    pyo3::append_to_inittab!(diffnet_py);
}
