//! End-to-end runs: fit, simulate training data, cluster, train, simulate the
//! evaluation window with and without the learned interventions, evaluate.

use std::fs;
use std::path::Path;

use log::info;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{self, select_num_clusters, standardize, ClusterModel, Selection};
use crate::config::RunConfig;
use crate::data::{EventLog, Network, StagePartition};
use crate::error::{DcplError, Result};
use crate::eval::{evaluate_closed_loop, impact_analysis, ClosedLoop, ClosedLoopRun, ImpactRow, RunSummary};
use crate::hawkes::{fit, simulate, HawkesModel, SimulationConfig};
use crate::policy::{RewardModel, StageContext};
use crate::trainer::{initial_assignment, sample_budgets, train, Checkpoint, ClusterInputs, Method, TrainConfig, TrainResult};

/// Independent stream for one purpose of a run seed.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.gen()
}

const STREAM_STD: u64 = 1;
const STREAM_BUDGET: u64 = 2;
const STREAM_SED: u64 = 3;
const STREAM_CLUSTER: u64 = 4;

fn window(w: [f64; 2], dt: f64) -> Result<StagePartition> {
    StagePartition::new(w[0], w[1], dt)
}

/// Everything shared by the methods of one seed.
pub struct Prepared {
    pub seed: u64,
    pub net: Network,
    pub model: HawkesModel,
    pub train_part: StagePartition,
    pub std_part: StagePartition,
    pub sed_part: StagePartition,
    /// Observed events of the training window.
    pub train_log: EventLog,
    /// Simulated training data.
    pub std_log: EventLog,
    /// Observed events of the held-out window.
    pub heldout: EventLog,
    pub init_features: DMatrix<f64>,
    pub selection: Option<Selection>,
    pub n_clusters: usize,
    pub budgets_std: Vec<(f64, f64)>,
    pub budgets_sed: Vec<(f64, f64)>,
    pub rm: RewardModel,
    pub ctxs: Vec<StageContext>,
}

impl Prepared {
    /// Training window plus simulated training data: the history before the
    /// evaluation window.
    pub fn history(&self) -> EventLog {
        self.train_log.merged(&self.std_log)
    }
}

/// Fits the activity model on the training window.
pub fn fit_model(cfg: &RunConfig, log: &EventLog, net: &Network) -> Result<HawkesModel> {
    let w = cfg.data.train;
    let train = EventLog::new(log.window(w[0], w[1]).to_vec());
    fit(&train, net, (w[0], w[1]), &cfg.hawkes).map_err(|e| e.context("fit"))
}

/// Simulated training data, budgets, initial features and, unless fixed by
/// `n_clusters`, the cluster count.
pub fn prepare(cfg: &RunConfig, log: &EventLog, net: &Network, model: HawkesModel, seed: u64, n_clusters: Option<usize>) -> Result<Prepared> {
    cfg.validate()?;
    let d = &cfg.data;
    let n = net.n_users();
    let train_part = window(d.train, d.dt)?;
    let std_part = window(d.std, d.dt)?;
    let sed_part = window(d.sed, d.dt)?;
    let train_log = EventLog::new(log.window(d.train[0], d.train[1]).to_vec());
    let heldout = EventLog::new(log.window(d.heldout[0], d.heldout[1]).to_vec());

    let std_log = simulate(&model, net, std_part, &train_log, &[], sub_seed(seed, STREAM_STD), SimulationConfig::default())
        .map_err(|e| e.context("simulate training data"))?;
    let budgets = sample_budgets(n, std_part.n_stages + sed_part.n_stages, sub_seed(seed, STREAM_BUDGET));
    let (budgets_std, budgets_sed) = budgets.split_at(std_part.n_stages);

    let init_features = clustering::initial_features(&train_log, net, &train_part).x;
    let candidates: Vec<usize> = cfg.clustering.candidates.iter().copied().filter(|&c| c >= 1 && c <= n).collect();
    let selection = if n_clusters.is_none() && cfg.clustering.n_clusters.is_none() {
        Some(select_num_clusters(&standardize(&init_features), &candidates, sub_seed(seed, STREAM_CLUSTER)).map_err(|e| e.context("cluster selection"))?)
    } else {
        None
    };
    let n_clusters = match (n_clusters.or(cfg.clustering.n_clusters), &selection) {
        (Some(c), _) => c,
        (None, Some(Selection { chosen: Some(c), .. })) => *c,
        _ => return Err(DcplError::invalid("cluster count could not be selected; set clustering.n_clusters")),
    };

    let rm = RewardModel::new(&model, net, d.dt)?;
    let ctxs = rm.contexts(&model, &train_log.merged(&std_log), &std_part).map_err(|e| e.context("stage contexts"))?;
    Ok(Prepared {
        seed,
        net: net.clone(),
        model,
        train_part,
        std_part,
        sed_part,
        train_log,
        std_log,
        heldout,
        init_features,
        selection,
        n_clusters,
        budgets_std: budgets_std.to_vec(),
        budgets_sed: budgets_sed.to_vec(),
        rm,
        ctxs,
    })
}

pub struct Trained {
    pub method: Method,
    pub cfg: TrainConfig,
    pub init: ClusterModel,
    pub result: TrainResult,
}

pub fn train_method(cfg: &RunConfig, prep: &Prepared, method: Method) -> Result<Trained> {
    let tcfg = cfg.train_config(method, prep.n_clusters, prep.seed, prep.budgets_std.clone());
    let inputs = ClusterInputs {
        log: &prep.train_log,
        net: &prep.net,
        part: &prep.train_part,
    };
    let (init, feats) = initial_assignment(method, prep.n_clusters, (tcfg.eps1, tcfg.eps2), sub_seed(prep.seed, STREAM_CLUSTER), &inputs)
        .map_err(|e| e.context(format!("initial clusters for {method}")))?;
    let result = train(&tcfg, &prep.rm, &prep.ctxs, &init, &feats).map_err(|e| e.context(format!("train {method}")))?;
    info!("{method} seed {}: {} epochs, converged = {}", prep.seed, result.epochs_run, result.converged);
    Ok(Trained {
        method,
        cfg: tcfg,
        init,
        result,
    })
}

pub struct Evaluated {
    pub closed: ClosedLoopRun,
    pub impact: Vec<ImpactRow>,
    pub summary: RunSummary,
}

/// Closed-loop evaluation of a trained policy plus held-out impact.
pub fn evaluate_method(cfg: &RunConfig, prep: &Prepared, trained: &Trained) -> Result<Evaluated> {
    let r = &trained.result;
    let cl = ClosedLoop {
        model: &prep.model,
        net: &prep.net,
        policy: &r.policy,
        value: &r.value,
        cfg: &trained.cfg,
        labels: r.final_labels.clone(),
        features: r.final_features.clone(),
    };
    let closed = evaluate_closed_loop(&cl, prep.sed_part, &prep.history(), &prep.budgets_sed, sub_seed(prep.seed, STREAM_SED))
        .map_err(|e| e.context(format!("evaluate {}", trained.method)))?;
    let impact = impact_analysis(&closed.with, &prep.heldout, &prep.sed_part, prep.net.n_users(), &cfg.eval.impact)?;
    let summary = RunSummary {
        seed: prep.seed,
        with: closed.perf_with.clone(),
        without: closed.perf_without.clone(),
        impact: impact.clone(),
        stage_labels: r.stage_labels.clone(),
    };
    Ok(Evaluated { closed, impact, summary })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TraceRow {
    epoch: usize,
    j_theta: f64,
    j_phi: f64,
    expected_reward: f64,
    mean_ari: Option<f64>,
    reclustered: bool,
    delta_theta: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DcplError + '_ {
    move |e| DcplError::io(path, e)
}

/// Writes `config.json`, `model.json`, `checkpoints/epoch_*.json`,
/// `clusters.csv`, `features.csv`, `std_events.jsonl` and `trace.csv`.
pub fn write_run(dir: &Path, cfg: &RunConfig, prep: &Prepared, trained: &Trained) -> Result<()> {
    fs::create_dir_all(dir.join("checkpoints")).map_err(io_err(dir))?;
    let mut run_cfg = cfg.clone();
    run_cfg.methods = vec![trained.method];
    run_cfg.seeds = vec![prep.seed];
    run_cfg.clustering.n_clusters = Some(prep.n_clusters);
    run_cfg.save(dir.join("config.json"))?;
    prep.model.save(dir.join("model.json"))?;
    prep.std_log.save(dir.join("std_events.jsonl"))?;

    let ckpt_dir = dir.join("checkpoints");
    for entry in fs::read_dir(&ckpt_dir).map_err(io_err(&ckpt_dir))? {
        let path = entry.map_err(io_err(&ckpt_dir))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            fs::remove_file(&path).map_err(io_err(&path))?;
        }
    }
    for c in &trained.result.checkpoints {
        let path = ckpt_dir.join(format!("epoch_{}.json", c.meta.epoch));
        fs::write(&path, serde_json::to_string(c)? + "\n").map_err(io_err(&path))?;
    }

    let r = &trained.result;
    let mut w = csv::Writer::from_path(dir.join("clusters.csv"))?;
    w.write_record(["user", "stage", "cluster"])?;
    for (i, c) in trained.init.labels.iter().enumerate() {
        w.serialize((i, "init", c))?;
    }
    for (k, labels) in r.stage_labels.iter().enumerate() {
        for (i, c) in labels.iter().enumerate() {
            w.serialize((i, k.to_string(), c))?;
        }
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = csv::Writer::from_path(dir.join("features.csv"))?;
    w.write_record(["user", "payoff_tweet", "payoff_retweet", "contribution_tweet", "contribution_retweet"])?;
    for i in 0..r.final_features.nrows() {
        let f = r.final_features.row(i);
        w.serialize((i, f[0], f[1], f[2], f[3]))?;
    }
    w.flush().map_err(io_err(dir))?;

    let mut w = csv::Writer::from_path(dir.join("trace.csv"))?;
    for t in &r.trace {
        w.serialize(TraceRow {
            epoch: t.epoch,
            j_theta: t.j_theta,
            j_phi: t.j_phi,
            expected_reward: t.expected_rewards.iter().sum(),
            mean_ari: t.mean_ari,
            reclustered: t.reclustered,
            delta_theta: t.delta_theta,
        })?;
    }
    if r.trace.is_empty() {
        w.write_record(["epoch", "j_theta", "j_phi", "expected_reward", "mean_ari", "reclustered", "delta_theta"])?;
    }
    w.flush().map_err(io_err(dir))?;
    Ok(())
}

/// Trained state read back from a run directory.
pub struct LoadedRun {
    pub cfg: RunConfig,
    pub model: HawkesModel,
    pub trained: Trained,
}

fn read_labels(path: &Path) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    let mut init = Vec::new();
    let mut stages: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut rdr = csv::Reader::from_path(path)?;
    for row in rdr.deserialize() {
        let (user, stage, cluster): (usize, String, usize) = row?;
        if stage == "init" {
            init.push((user, cluster));
        } else {
            let k: usize = stage.parse().map_err(|_| DcplError::invalid(format!("{}: bad stage '{stage}'", path.display())))?;
            if stages.len() <= k {
                stages.resize(k + 1, Vec::new());
            }
            stages[k].push((user, cluster));
        }
    }
    let order = |mut v: Vec<(usize, usize)>| {
        v.sort_unstable();
        v.into_iter().map(|(_, c)| c).collect::<Vec<_>>()
    };
    let init = order(init);
    Ok((init, stages.into_iter().map(order).collect()))
}

fn read_features(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows: Vec<(usize, f64, f64, f64, f64)> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(DMatrix::from_fn(rows.len(), clustering::FEATURE_WIDTH, |i, f| match f {
        0 => rows[i].1,
        1 => rows[i].2,
        2 => rows[i].3,
        _ => rows[i].4,
    }))
}

/// Reads a run directory written by [`write_run`], restoring the networks
/// from the latest checkpoint.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let cfg = RunConfig::load(dir.join("config.json"))?;
    let model = HawkesModel::load(dir.join("model.json"))?;
    let method = *cfg.methods.first().ok_or_else(|| DcplError::invalid("run config names no method"))?;
    let seed = *cfg.seeds.first().ok_or_else(|| DcplError::invalid("run config names no seed"))?;
    let ckpt_dir = dir.join("checkpoints");
    let mut latest: Option<(usize, std::path::PathBuf)> = None;
    for entry in fs::read_dir(&ckpt_dir).map_err(io_err(&ckpt_dir))? {
        let path = entry.map_err(io_err(&ckpt_dir))?.path();
        let epoch = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.strip_prefix("epoch_"))
            .and_then(|s| s.parse::<usize>().ok());
        if let Some(e) = epoch {
            if latest.as_ref().map_or(true, |(b, _)| e > *b) {
                latest = Some((e, path));
            }
        }
    }
    let (init, stage_labels) = read_labels(&dir.join("clusters.csv"))?;
    let n_clusters = cfg.clustering.n_clusters.unwrap_or(1);
    let tcfg = cfg.train_config(method, n_clusters, seed, Vec::new());
    let c = method.effective_clusters(n_clusters, model.n_users());
    let (policy, value, epochs_run) = match latest {
        Some((epoch, path)) => {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let ck: Checkpoint = serde_json::from_str(&text)?;
            let (p, v) = ck.nets(tcfg.input_scaling)?;
            (p, v, epoch)
        }
        None => {
            let (p, v) = crate::trainer::init_networks(&tcfg, model.n_users());
            (p, v, 0)
        }
    };
    let init_model = ClusterModel::new(init.clone(), DMatrix::zeros(c, clustering::FEATURE_WIDTH), tcfg.eps1, tcfg.eps2)?;
    let result = TrainResult {
        policy,
        value,
        final_labels: stage_labels.last().cloned().unwrap_or_else(|| init.clone()),
        stage_labels,
        final_features: read_features(&dir.join("features.csv"))?,
        trace: Vec::new(),
        epochs_run,
        converged: false,
        checkpoints: Vec::new(),
        max_budget_error: 0.0,
        min_contribution: 0.0,
    };
    Ok(LoadedRun {
        cfg,
        model,
        trained: Trained {
            method,
            cfg: tcfg,
            init: init_model,
            result,
        },
    })
}

/// Loads an event log and a network over a common user count: `n_users` when
/// given, otherwise the largest index seen in either file plus one.
pub fn load_data(events: &Path, network: &Path, n_users: Option<usize>) -> Result<(EventLog, Network)> {
    let net = crate::data::load_network(network, n_users)?;
    let log = crate::data::load_events(events, n_users)?;
    let n = n_users.unwrap_or_else(|| net.n_users().max(log.max_user().map_or(0, |u| u + 1)));
    let net = if net.n_users() < n {
        Network::from_edges(n, net.edges().collect::<Vec<_>>())?
    } else {
        net
    };
    Ok((log, net))
}
