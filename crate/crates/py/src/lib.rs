//! Python module `dcpl`: networks, event logs, Hawkes fitting and simulation,
//! clustering utilities and single training runs.

use std::path::PathBuf;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dcpl_core::clustering::kmeans::{kmeans as core_kmeans, select_num_clusters as core_select};
use dcpl_core::clustering::metrics;
use dcpl_core::config::RunConfig;
use dcpl_core::data::{self, Kind, Label, StagePartition};
use dcpl_core::hawkes::{self, FitConfig, InterventionPlan, Process, SimulationConfig};
use dcpl_core::pipeline::{evaluate_method, fit_model, load_data, prepare, train_method, write_run};
use dcpl_core::synthetic::{generate, SyntheticConfig};
use dcpl_core::trainer::Method;
use dcpl_core::DcplError;

fn err(e: DcplError) -> PyErr {
    match e {
        DcplError::Unstable { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("rows must have equal length"));
    }
    Ok(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}

fn process(name: &str) -> PyResult<Process> {
    Process::from_name(name).ok_or_else(|| PyValueError::new_err(format!("unknown process {name:?}")))
}

/// Follower network where `(i, j)` means user `j` follows user `i`.
#[pyclass(module = "dcpl", from_py_object)]
#[derive(Clone)]
pub struct Network {
    inner: data::Network,
}

#[pymethods]
impl Network {
    #[new]
    fn new(n_users: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        let inner = data::Network::from_edges(n_users, edges).map_err(err)?;
        Ok(Network { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, n_users=None))]
    fn load(path: PathBuf, n_users: Option<usize>) -> PyResult<Self> {
        let inner = data::load_network(path, n_users).map_err(err)?;
        Ok(Network { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn followers(&self, user: usize) -> PyResult<Vec<usize>> {
        if user >= self.inner.n_users() {
            return Err(PyValueError::new_err("user out of range"));
        }
        Ok(self.inner.followers(user).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Network(n_users={}, edges={})", self.inner.n_users(), self.inner.edges().count())
    }
}

/// Time-ordered activity log.
#[pyclass(module = "dcpl", from_py_object)]
#[derive(Clone)]
pub struct EventLog {
    inner: data::EventLog,
}

#[pymethods]
impl EventLog {
    #[staticmethod]
    #[pyo3(signature = (path, n_users=None))]
    fn load(path: PathBuf, n_users: Option<usize>) -> PyResult<Self> {
        let inner = data::load_events(path, n_users).map_err(err)?;
        Ok(EventLog { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    /// Events as `(t, user, kind, label, target)` tuples.
    fn events(&self) -> Vec<(f64, usize, &'static str, Option<&'static str>, Option<usize>)> {
        self.inner
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    Kind::Tweet => "tweet",
                    Kind::Retweet => "retweet",
                    Kind::Like => "like",
                };
                let label = e.label.map(|l| match l {
                    Label::True => "T",
                    Label::Fake => "F",
                });
                (e.t, e.user, kind, label, e.target)
            })
            .collect()
    }

    fn window(&self, t0: f64, t1: f64) -> EventLog {
        EventLog {
            inner: data::EventLog::new(self.inner.window(t0, t1).to_vec()),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("EventLog(events={})", self.inner.len())
    }
}

/// The five fitted activity processes.
#[pyclass(module = "dcpl", from_py_object)]
#[derive(Clone)]
pub struct HawkesModel {
    inner: hawkes::HawkesModel,
}

#[pymethods]
impl HawkesModel {
    #[staticmethod]
    #[pyo3(signature = (log, network, t0, t1, rank=8, omega=1.0, iterations=500))]
    fn fit(log: &EventLog, network: &Network, t0: f64, t1: f64, rank: usize, omega: f64, iterations: usize) -> PyResult<Self> {
        let cfg = FitConfig {
            rank,
            omega,
            iterations,
            ..Default::default()
        };
        let inner = hawkes::fit(&log.inner, &network.inner, (t0, t1), &cfg).map_err(err)?;
        Ok(HawkesModel { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = hawkes::HawkesModel::load(path).map_err(err)?;
        Ok(HawkesModel { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users()
    }

    /// Base rates of one process, by name (for example `"true_tweet"`).
    fn base_rates(&self, process_name: &str) -> PyResult<Vec<f64>> {
        Ok(self.inner.params(process(process_name)?).mu.iter().copied().collect())
    }

    /// Dense branching matrix of one process.
    fn kernel(&self, process_name: &str) -> PyResult<Vec<Vec<f64>>> {
        let m = self.inner.params(process(process_name)?).kernel.dense();
        Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    /// Simulates `[t0, t1)` in stages of `dt`. `plans` holds one
    /// `(tweet, retweet)` pair of per-user extra rates per stage.
    #[pyo3(signature = (network, t0, t1, seed, dt=1.0, plans=None, history=None))]
    #[allow(clippy::too_many_arguments)]
    fn simulate(
        &self,
        network: &Network,
        t0: f64,
        t1: f64,
        seed: u64,
        dt: f64,
        plans: Option<Vec<(Vec<f64>, Vec<f64>)>>,
        history: Option<&EventLog>,
    ) -> PyResult<EventLog> {
        let part = StagePartition::new(t0, t1 - t0, dt).map_err(err)?;
        let plans: Vec<InterventionPlan> = plans
            .unwrap_or_default()
            .into_iter()
            .enumerate()
            .map(|(stage, (tweet, retweet))| InterventionPlan {
                stage,
                budget_tweet: tweet.iter().sum(),
                budget_retweet: retweet.iter().sum(),
                tweet,
                retweet,
            })
            .collect();
        let empty = data::EventLog::default();
        let history = history.map_or(&empty, |h| &h.inner);
        let inner = hawkes::simulate(&self.inner, &network.inner, part, history, &plans, seed, SimulationConfig::default())
            .map_err(err)?;
        Ok(EventLog { inner })
    }
}

#[pyfunction]
fn ari(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    metrics::ari(&a, &b).map_err(err)
}

#[pyfunction]
fn nmi(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    metrics::nmi(&a, &b).map_err(err)
}

/// K-means++ with Lloyd iterations; returns `(labels, wcssd)`.
#[pyfunction]
#[pyo3(signature = (rows, k, seed=0))]
fn kmeans(rows: Vec<Vec<f64>>, k: usize, seed: u64) -> PyResult<(Vec<usize>, f64)> {
    let r = core_kmeans(&matrix(&rows)?, k, seed).map_err(err)?;
    Ok((r.labels, r.wcssd))
}

/// Scores each candidate count; returns `(chosen, [(c, wcssd, bic)])`.
#[pyfunction]
#[pyo3(signature = (rows, candidates, seed=0))]
fn select_num_clusters(rows: Vec<Vec<f64>>, candidates: Vec<usize>, seed: u64) -> PyResult<(Option<usize>, Vec<(usize, f64, f64)>)> {
    let s = core_select(&matrix(&rows)?, &candidates, seed).map_err(err)?;
    Ok((s.chosen, s.rows.iter().map(|r| (r.c, r.wcssd, r.bic)).collect()))
}

/// Two-block synthetic network, ground-truth model and log over `[0, horizon)`.
#[pyfunction]
#[pyo3(signature = (n_users=20, horizon=40.0, seed=7))]
fn synthetic(n_users: usize, horizon: f64, seed: u64) -> PyResult<(Network, EventLog, HawkesModel)> {
    let d = generate(&SyntheticConfig {
        n_users,
        horizon,
        seed,
        ..Default::default()
    })
    .map_err(err)?;
    Ok((Network { inner: d.net }, EventLog { inner: d.log }, HawkesModel { inner: d.model }))
}

/// Empirical performance of a log over stages of `dt` starting at `t0`.
#[pyfunction]
#[pyo3(signature = (log, network, t0, t1, dt=1.0))]
fn performance(log: &EventLog, network: &Network, t0: f64, t1: f64, dt: f64) -> PyResult<f64> {
    let part = StagePartition::new(t0, t1 - t0, dt).map_err(err)?;
    let p = dcpl_core::eval::performance(&log.inner, &network.inner, &part).map_err(err)?;
    Ok(p.performance)
}

/// Trains and evaluates one method from a run config, writes the run
/// directory to `out`, and returns performance with and without interventions.
#[pyfunction]
#[pyo3(signature = (config, method, seed, out))]
fn train_run(py: Python<'_>, config: PathBuf, method: &str, seed: u64, out: PathBuf) -> PyResult<(f64, f64)> {
    let method: Method = method.parse().map_err(err)?;
    py.detach(|| {
        let cfg = RunConfig::load(&config)?;
        cfg.validate()?;
        let events = cfg.data.events.clone().ok_or_else(|| DcplError::invalid("data.events is not set"))?;
        let network = cfg.data.network.clone().ok_or_else(|| DcplError::invalid("data.network is not set"))?;
        let (log, net) = load_data(&events, &network, cfg.data.n_users)?;
        let model = fit_model(&cfg, &log, &net)?;
        let prep = prepare(&cfg, &log, &net, model, seed, None)?;
        let trained = train_method(&cfg, &prep, method)?;
        write_run(&out, &cfg, &prep, &trained)?;
        let ev = evaluate_method(&cfg, &prep, &trained)?;
        Ok((ev.summary.with.performance, ev.summary.without.performance))
    })
    .map_err(err)
}

#[pymodule]
fn dcpl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<EventLog>()?;
    m.add_class::<HawkesModel>()?;
    m.add_function(wrap_pyfunction!(ari, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(select_num_clusters, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(performance, m)?)?;
    m.add_function(wrap_pyfunction!(train_run, m)?)?;
    Ok(())
}
