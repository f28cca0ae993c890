//! Python bindings. Vertices and actions are 1-based on the Python side;
//! distributions over profiles follow the order of `Instance.profiles()`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use netgibbs::centralized::{centralized_regret, centralized_regret_bound, centralized_strategies};
use netgibbs::glauber::{decentralized_regret, evolve_exact, simulate_replica};
use netgibbs::measures::{self, wasserstein1_hamming};
use netgibbs::schedule::{generate_iid, generate_shocks, generate_zero, load_schedule, save_schedule};
use netgibbs::theory::{self, check_suite};
use netgibbs::{
    CostSchedule, DefaultMeasure, Dist, Error, Instance, NetworkGraph, RegretLedger, SuiteOptions, ThmConstants,
    DEFAULT_DENSE_CAP,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for netgibbs::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn dist(p: Vec<f64>) -> PyResult<Dist> {
    Dist::new(p).py()
}

#[pyclass(name = "Graph", module = "netgibbs", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: NetworkGraph,
}

#[pymethods]
impl PyGraph {
    /// Graph on `n` vertices from 1-based edge pairs.
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self {
            inner: NetworkGraph::from_one_based(n, &edges).py()?,
        })
    }

    #[staticmethod]
    fn path(n: usize) -> PyResult<Self> {
        if n == 0 {
            return Err(PyValueError::new_err("path needs at least one vertex"));
        }
        Ok(Self {
            inner: NetworkGraph::path(n),
        })
    }

    #[staticmethod]
    fn cycle(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: NetworkGraph::cycle(n).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: NetworkGraph::load(&path).py()?,
        })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().iter().map(|&(u, v)| (u + 1, v + 1)).collect()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={:?})", self.inner.num_vertices(), self.edges())
    }
}

#[pyclass(name = "Schedule", module = "netgibbs", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySchedule {
    inner: CostSchedule,
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    #[pyo3(signature = (graph, q, horizon, seed, amplitude = 1.0))]
    fn iid(graph: &PyGraph, q: usize, horizon: usize, seed: u64, amplitude: f64) -> PyResult<Self> {
        Ok(Self {
            inner: generate_iid(&graph.inner, q, horizon, seed, amplitude).py()?,
        })
    }

    #[staticmethod]
    fn shocks(graph: &PyGraph, q: usize, horizon: usize, seed: u64, epoch_mean: usize) -> PyResult<Self> {
        Ok(Self {
            inner: generate_shocks(&graph.inner, q, horizon, seed, epoch_mean).py()?,
        })
    }

    #[staticmethod]
    fn zero(graph: &PyGraph, q: usize, horizon: usize) -> PyResult<Self> {
        Ok(Self {
            inner: generate_zero(&graph.inner, q, horizon).py()?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CostSchedule::from_json(text).py()?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: load_schedule(&path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_schedule(&self.inner, &path).py()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn truncated(&self, horizon: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.truncated(horizon).py()?,
        })
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q()
    }

    #[getter]
    fn graph_hash(&self) -> &str {
        self.inner.graph_hash()
    }

    fn shock_rounds(&self) -> Vec<usize> {
        self.inner.shock_rounds()
    }

    /// Value of `f_t` at a 1-based profile.
    fn cost(&self, graph: &PyGraph, t: usize, x: Vec<usize>) -> PyResult<f64> {
        let f = t
            .checked_sub(1)
            .and_then(|i| self.inner.costs().get(i))
            .ok_or_else(|| PyValueError::new_err(format!("round {t} outside 1..={}", self.inner.horizon())))?;
        let x: Vec<usize> = x.iter().map(|&a| a.wrapping_sub(1)).collect();
        f.evaluate(&graph.inner, &x).py()
    }

    fn __len__(&self) -> usize {
        self.inner.horizon()
    }
}

#[pyclass(name = "Instance", module = "netgibbs", frozen)]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    /// `mu0` is a list of per-vertex action distributions; uniform when omitted.
    #[new]
    #[pyo3(signature = (graph, q, beta, mu0 = None))]
    fn new(graph: &PyGraph, q: usize, beta: f64, mu0: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let mu0 = match mu0 {
            Some(rows) => DefaultMeasure::new(rows).py()?,
            None => DefaultMeasure::uniform(graph.inner.num_vertices(), q),
        };
        Ok(Self {
            inner: Instance::new(graph.inner.clone(), q, mu0, beta).py()?,
        })
    }

    /// Path on four vertices, two actions, uniform default measure, β = 0.2.
    #[staticmethod]
    fn canonical() -> Self {
        Self {
            inner: Instance::canonical(),
        }
    }

    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph {
            inner: self.inner.graph.clone(),
        }
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    fn is_regular(&self) -> bool {
        self.inner.is_regular()
    }

    /// All profiles, 1-based, in the order used for distributions.
    fn profiles(&self) -> PyResult<Vec<Vec<usize>>> {
        let dense = self.inner.dense(DEFAULT_DENSE_CAP).py()?;
        Ok(dense
            .space
            .iter()
            .map(|x| x.into_iter().map(|a| a + 1).collect())
            .collect())
    }

    fn mu0(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.dense(DEFAULT_DENSE_CAP).py()?.mu0.into_probs())
    }

    /// `kappa_star`, `K`, `theta`, `theta_d`, `T0`, `T1`; `None` when `Δβ >= 1`.
    fn constants<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Ok(c) = ThmConstants::new(&self.inner) else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("kappa_star", c.kappa_star)?;
        d.set_item("K", c.k)?;
        d.set_item("theta", c.theta)?;
        d.set_item("theta_d", c.theta_d)?;
        d.set_item("T0", c.t0)?;
        d.set_item("T1", c.t1)?;
        Ok(Some(d))
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n={}, q={}, beta={})",
            self.inner.num_vertices(),
            self.inner.q,
            self.inner.beta
        )
    }
}

fn ledger_dict<'py>(py: Python<'py>, ledger: RegretLedger) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("losses", ledger.per_round_losses)?;
    d.set_item("comparator", ledger.comparator_values)?;
    d.set_item("regret", ledger.cumulative_regret)?;
    d.set_item("bound", ledger.bound_values)?;
    Ok(d)
}

fn checked(instance: &PyInstance, schedule: &PySchedule) -> PyResult<netgibbs::DenseSpace> {
    schedule.inner.check_graph(&instance.inner.graph).py()?;
    instance.inner.dense(DEFAULT_DENSE_CAP).py()
}

#[pyfunction]
fn gibbs(base: Vec<f64>, neg_energy: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(measures::gibbs(&dist(base)?, &neg_energy).py()?.into_probs())
}

#[pyfunction]
fn kl(mu: Vec<f64>, nu: Vec<f64>) -> PyResult<f64> {
    measures::kl_divergence(&dist(mu)?, &dist(nu)?).py()
}

#[pyfunction]
fn tv(mu: Vec<f64>, nu: Vec<f64>) -> PyResult<f64> {
    measures::tv_distance(&dist(mu)?, &dist(nu)?).py()
}

/// Exact W1 under the Hamming metric for distributions over `instance.profiles()`.
#[pyfunction]
fn w1(instance: &PyInstance, mu: Vec<f64>, nu: Vec<f64>) -> PyResult<f64> {
    wasserstein1_hamming(&dist(mu)?, &dist(nu)?, &instance.inner.graph, instance.inner.q).py()
}

#[pyfunction]
fn span(values: Vec<f64>) -> PyResult<f64> {
    measures::span_seminorm(&values).py()
}

/// `pi_1, ..., pi_{T+1}`.
#[pyfunction]
fn centralized(instance: &PyInstance, schedule: &PySchedule) -> PyResult<Vec<Vec<f64>>> {
    let dense = checked(instance, schedule)?;
    let pis = centralized_strategies(&instance.inner, &dense, schedule.inner.costs()).py()?;
    Ok(pis.into_iter().map(Dist::into_probs).collect())
}

/// `mu_0, ..., mu_T`.
#[pyfunction]
fn glauber(instance: &PyInstance, schedule: &PySchedule) -> PyResult<Vec<Vec<f64>>> {
    let dense = checked(instance, schedule)?;
    let mus = evolve_exact(&instance.inner, &dense, schedule.inner.costs()).py()?;
    Ok(mus.into_iter().map(Dist::into_probs).collect())
}

#[pyfunction]
fn regret_centralized<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    schedule: &PySchedule,
) -> PyResult<Bound<'py, PyDict>> {
    let dense = checked(instance, schedule)?;
    ledger_dict(
        py,
        centralized_regret(schedule.inner.costs(), &instance.inner, &dense).py()?,
    )
}

#[pyfunction]
fn regret_local<'py>(py: Python<'py>, instance: &PyInstance, schedule: &PySchedule) -> PyResult<Bound<'py, PyDict>> {
    let dense = checked(instance, schedule)?;
    ledger_dict(
        py,
        decentralized_regret(schedule.inner.costs(), &instance.inner, &dense).py()?,
    )
}

#[pyfunction]
fn bound_centralized(instance: &PyInstance, horizon: usize) -> f64 {
    let i = &instance.inner;
    centralized_regret_bound(i.beta, &i.graph, i.mu0.theta_d(), horizon)
}

#[pyfunction]
fn bound_local(instance: &PyInstance, horizon: usize) -> PyResult<f64> {
    let c = ThmConstants::new(&instance.inner).py()?;
    theory::decentralized_regret_bound(&c, &instance.inner, horizon).py()
}

#[pyfunction]
fn kappa_star(beta: f64, max_degree: usize, n: usize) -> PyResult<f64> {
    theory::kappa_star(beta, max_degree, n).py()
}

#[pyfunction]
fn delta_t(beta: f64, n: usize, max_degree: usize, t: usize) -> f64 {
    theory::delta_t(beta, n, max_degree, t)
}

#[pyfunction]
fn p_poly(t: usize, u: f64) -> f64 {
    theory::p_poly(t, u)
}

#[pyfunction]
fn t0_t1(k: f64, u: f64) -> PyResult<(usize, usize)> {
    theory::compute_t0_t1(k, u).py()
}

/// One realized path: 1-based activations and profiles, and per-round costs.
#[pyfunction]
#[pyo3(signature = (instance, schedule, seed, replica = 0))]
fn simulate_path<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    schedule: &PySchedule,
    seed: u64,
    replica: u64,
) -> PyResult<Bound<'py, PyDict>> {
    schedule.inner.check_graph(&instance.inner.graph).py()?;
    let path = simulate_replica(&instance.inner, schedule.inner.costs(), seed, replica).py()?;
    let d = PyDict::new(py);
    d.set_item(
        "activations",
        path.activations.iter().map(|v| v + 1).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "profiles",
        path.profiles
            .iter()
            .map(|x| x.iter().map(|a| a + 1).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )?;
    d.set_item("costs", path.costs)?;
    Ok(d)
}

/// Runs the certification suite; returns `(passed, report)` with the report as parsed JSON.
#[pyfunction]
fn verify<'py>(py: Python<'py>, instance: &PyInstance, schedule: &PySchedule) -> PyResult<(bool, Bound<'py, PyAny>)> {
    schedule.inner.check_graph(&instance.inner.graph).py()?;
    let report = check_suite(&instance.inner, schedule.inner.costs(), SuiteOptions::default()).py()?;
    let parsed = py.import("json")?.call_method1("loads", (report.to_json(),))?;
    Ok((report.passed(), parsed))
}

#[pymodule]
#[pyo3(name = "netgibbs")]
fn netgibbs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySchedule>()?;
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(gibbs, m)?)?;
    m.add_function(wrap_pyfunction!(kl, m)?)?;
    m.add_function(wrap_pyfunction!(tv, m)?)?;
    m.add_function(wrap_pyfunction!(w1, m)?)?;
    m.add_function(wrap_pyfunction!(span, m)?)?;
    m.add_function(wrap_pyfunction!(centralized, m)?)?;
    m.add_function(wrap_pyfunction!(glauber, m)?)?;
    m.add_function(wrap_pyfunction!(regret_centralized, m)?)?;
    m.add_function(wrap_pyfunction!(regret_local, m)?)?;
    m.add_function(wrap_pyfunction!(bound_centralized, m)?)?;
    m.add_function(wrap_pyfunction!(bound_local, m)?)?;
    m.add_function(wrap_pyfunction!(kappa_star, m)?)?;
    m.add_function(wrap_pyfunction!(delta_t, m)?)?;
    m.add_function(wrap_pyfunction!(p_poly, m)?)?;
    m.add_function(wrap_pyfunction!(t0_t1, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
