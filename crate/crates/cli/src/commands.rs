use std::fs;
use std::path::Path;

use dcpl_core::clustering::{initial_features, select_num_clusters, standardize};
use dcpl_core::config::RunConfig;
use dcpl_core::data::{EventLog, Network, StagePartition};
use dcpl_core::eval::{emit_report, relative_to_best, sign_test, summarize, ReportInputs, RunSummary};
use dcpl_core::hawkes::{self, simulate, FitConfig, HawkesModel, InterventionPlan, SimulationConfig};
use dcpl_core::pipeline::{evaluate_method, fit_model, load_data, load_run, prepare, train_method, write_run, Prepared};
use dcpl_core::trainer::Method;
use rayon::prelude::*;

use crate::error::{io, require_dir, require_file, CliError, CliResult};
use crate::{ClusterArgs, CompareArgs, EvaluateArgs, FitArgs, SimulateArgs, TrainArgs};

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn window(w: &[f64]) -> CliResult<(f64, f64)> {
    match w {
        [a, b] if b > a => Ok((*a, *b)),
        _ => Err(invalid(format!("--window: expected T0 < T1, got {w:?}"))),
    }
}

/// Parses `a..b` (inclusive) or a comma-separated list.
pub fn parse_list(flag: &str, text: &str) -> CliResult<Vec<u64>> {
    let bad = || invalid(format!("{flag}: cannot parse '{text}'"));
    let values: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| io(path, e))
}

fn create_parent(path: &Path) -> CliResult<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(p) => create_dir(p),
        None => Ok(()),
    }
}

fn log_span(log: &EventLog) -> CliResult<(f64, f64)> {
    let last = log.events().last().ok_or_else(|| invalid("--events: the log is empty"))?;
    Ok((0.0, last.t.floor() + 1.0))
}

pub fn fit(a: FitArgs) -> CliResult<String> {
    require_file("--events", &a.events)?;
    require_file("--network", &a.network)?;
    let (log, net) = load_data(&a.events, &a.network, a.n_users)?;
    let w = match &a.window {
        Some(w) => window(w)?,
        None => log_span(&log)?,
    };
    let mut cfg = FitConfig::default();
    if let Some(r) = a.rank {
        if r == 0 {
            return Err(invalid("--rank must be positive"));
        }
        cfg.rank = r;
    }
    if let Some(g) = a.omega_grid {
        if g.is_empty() || g.iter().any(|&o| !(o > 0.0)) {
            return Err(invalid("--omega-grid: decays must be positive"));
        }
        cfg.omega_grid = Some(g);
    }
    let train = EventLog::new(log.window(w.0, w.1).to_vec());
    let model = hawkes::fit(&train, &net, w, &cfg)?;
    create_parent(&a.out)?;
    model.save(&a.out)?;
    Ok(format!("fit: {} users, {} events in [{}, {}) -> {}", net.n_users(), train.len(), w.0, w.1, a.out.display()))
}

pub fn simulate_cmd(a: SimulateArgs) -> CliResult<String> {
    require_file("--model", &a.model)?;
    let model = HawkesModel::load(&a.model)?;
    let n = model.n_users();
    let net = match &a.network {
        Some(p) => {
            require_file("--network", p)?;
            dcpl_core::data::load_network(p, Some(n))?
        }
        None => Network::from_edges(n, Vec::new())?,
    };
    let history = match &a.history {
        Some(p) => {
            require_file("--history", p)?;
            dcpl_core::data::load_events(p, Some(n))?
        }
        None => EventLog::default(),
    };
    let plans: Vec<InterventionPlan> = match &a.interventions {
        Some(p) => {
            require_file("--interventions", p)?;
            let text = fs::read_to_string(p).map_err(|e| io(p, e))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("--interventions: {e}")))?
        }
        None => Vec::new(),
    };
    for p in &plans {
        if p.tweet.len() != n || p.retweet.len() != n {
            return Err(invalid(format!("--interventions: stage {} has rates for {} users, model has {n}", p.stage, p.tweet.len())));
        }
        if p.tweet.iter().chain(&p.retweet).any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(invalid(format!("--interventions: stage {} has a negative or non-finite rate", p.stage)));
        }
    }
    let (t0, t1) = window(&a.window)?;
    let part = StagePartition::new(t0, t1, a.dt)?;
    let sim = simulate(&model, &net, part, &history, &plans, a.seed, SimulationConfig::default())?;
    let out = EventLog::new(sim.window(t0, t1).to_vec());
    create_parent(&a.out)?;
    out.save(&a.out)?;
    Ok(format!("simulate: {} events in [{t0}, {t1}) over {} stages -> {}", out.len(), part.n_stages, a.out.display()))
}

pub fn cluster(a: ClusterArgs) -> CliResult<String> {
    require_file("--events", &a.events)?;
    let network = match &a.network {
        Some(n) => n.clone(),
        None => a.events.parent().unwrap_or(Path::new(".")).join("network.csv"),
    };
    require_file("--network", &network)?;
    let candidates: Vec<usize> = parse_list("--candidates", &a.candidates)?.into_iter().map(|c| c as usize).collect();
    if candidates.len() < 3 || candidates.contains(&0) {
        return Err(invalid("--candidates: need at least 3 positive counts"));
    }
    let (log, net) = load_data(&a.events, &network, None)?;
    let (t0, t1) = match &a.window {
        Some(w) => window(w)?,
        None => log_span(&log)?,
    };
    let part = StagePartition::new(t0, t1, a.dt)?;
    let n = net.n_users();
    if let Some(c) = candidates.iter().find(|&&c| c > n) {
        return Err(invalid(format!("--candidates: {c} exceeds the {n} users")));
    }
    let sub = EventLog::new(log.window(t0, t1).to_vec());
    let feats = initial_features(&sub, &net, &part);
    let x = standardize(&feats.x);
    let sel = select_num_clusters(&x, &candidates, a.seed)?;
    create_dir(&a.out)?;

    let mut w = csv::Writer::from_path(a.out.join("scree.csv")).map_err(dcpl_core::DcplError::from)?;
    w.write_record(["C", "BIC", "WC-SSD"]).map_err(dcpl_core::DcplError::from)?;
    for r in &sel.rows {
        w.serialize((r.c, r.bic, r.wcssd)).map_err(dcpl_core::DcplError::from)?;
    }
    w.flush().map_err(|e| io(&a.out, e))?;
    let sel_path = a.out.join("selection.json");
    fs::write(&sel_path, serde_json::to_string_pretty(&sel).map_err(dcpl_core::DcplError::from)? + "\n").map_err(|e| io(&sel_path, e))?;

    let chosen = sel.chosen;
    if let Some(c) = chosen {
        let model = dcpl_core::clustering::clusters_from_matrix(&x, c, 0.5, 0.5, a.seed)?;
        let mut w = csv::Writer::from_path(a.out.join("clusters.csv")).map_err(dcpl_core::DcplError::from)?;
        w.write_record(["user", "cluster"]).map_err(dcpl_core::DcplError::from)?;
        for (i, l) in model.labels.iter().enumerate() {
            w.serialize((i, l)).map_err(dcpl_core::DcplError::from)?;
        }
        w.flush().map_err(|e| io(&a.out, e))?;
    }
    Ok(match chosen {
        Some(c) => format!("cluster: chose C = {c} from {} candidates -> {}", candidates.len(), a.out.display()),
        None => format!("cluster: no elbow among {} candidates -> {}", candidates.len(), a.out.display()),
    })
}

fn load_config(path: &Path) -> CliResult<RunConfig> {
    require_file("--config", path)?;
    let cfg = RunConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn config_data(cfg: &RunConfig) -> CliResult<(EventLog, Network)> {
    let events = cfg.data.events.as_ref().ok_or_else(|| invalid("config: data.events is not set"))?;
    let network = cfg.data.network.as_ref().ok_or_else(|| invalid("config: data.network is not set"))?;
    require_file("data.events", events)?;
    require_file("data.network", network)?;
    Ok(load_data(events, network, cfg.data.n_users)?)
}

fn parse_method(name: &str) -> CliResult<Method> {
    name.parse().map_err(|e: dcpl_core::DcplError| invalid(format!("--method: {e}")))
}

pub fn train(a: TrainArgs) -> CliResult<String> {
    let cfg = load_config(&a.config)?;
    let method = parse_method(&a.method)?;
    let seed = a.seed.unwrap_or(cfg.seeds[0]);
    let (log, net) = config_data(&cfg)?;
    let model = fit_model(&cfg, &log, &net)?;
    let prep = prepare(&cfg, &log, &net, model, seed, None)?;
    let trained = train_method(&cfg, &prep, method)?;
    write_run(&a.out, &cfg, &prep, &trained)?;
    let r = &trained.result;
    let last = r.trace.last().map_or(f64::NAN, |t| t.expected_rewards.iter().sum());
    Ok(format!(
        "train: {method} seed {seed}, C = {}, {} epochs (converged = {}), expected reward {last:.3} -> {}",
        prep.n_clusters,
        r.epochs_run,
        r.converged,
        a.out.display()
    ))
}

pub fn evaluate(a: EvaluateArgs) -> CliResult<String> {
    require_dir("--run", &a.run)?;
    require_file("--run", &a.run.join("config.json"))?;
    let loaded = load_run(&a.run)?;
    let cfg = &loaded.cfg;
    let (log, net) = config_data(cfg)?;
    let seed = cfg.seeds[0];
    let prep = prepare(cfg, &log, &net, loaded.model.clone(), seed, cfg.clustering.n_clusters)?;
    let ev = evaluate_method(cfg, &prep, &loaded.trained)?;
    let runs = [ev.summary];
    let name = loaded.trained.method.name();
    emit_report(&a.run, &ReportInputs { method: name, runs: &runs, scree: prep.selection.as_ref().map(|s| s.rows.as_slice()) })?;
    Ok(format!(
        "evaluate: {name} seed {seed}, performance {:.3} (without {:.3}) -> {}",
        runs[0].with.performance,
        runs[0].without.performance,
        a.run.join("report.json").display()
    ))
}

fn run_one(cfg: &RunConfig, prep: &Prepared, method: Method) -> CliResult<RunSummary> {
    let trained = train_method(cfg, prep, method)?;
    Ok(evaluate_method(cfg, prep, &trained)?.summary)
}

pub fn compare(a: CompareArgs) -> CliResult<String> {
    let cfg = load_config(&a.config)?;
    let methods: Vec<Method> = match &a.methods {
        Some(s) => s.split(',').map(|m| parse_method(m.trim())).collect::<CliResult<_>>()?,
        None => cfg.methods.clone(),
    };
    let seeds: Vec<u64> = match &a.seeds {
        Some(s) => parse_list("--seeds", s)?,
        None => cfg.seeds.clone(),
    };
    if methods.is_empty() {
        return Err(invalid("--methods: no methods given"));
    }
    if a.jobs == Some(0) {
        return Err(invalid("--jobs must be positive"));
    }
    let (log, net) = config_data(&cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let model = fit_model(&cfg, &log, &net)?;
    let preps: Vec<Prepared> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| prepare(&cfg, &log, &net, model.clone(), s, None).map_err(CliError::from))
            .collect::<CliResult<_>>()
    })?;
    let jobs: Vec<(usize, usize)> = (0..methods.len()).flat_map(|m| (0..preps.len()).map(move |s| (m, s))).collect();
    let results: Vec<RunSummary> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, s)| run_one(&cfg, &preps[s], methods[m]))
            .collect::<CliResult<_>>()
    })?;
    let per_method: Vec<Vec<RunSummary>> = results.chunks(preps.len()).map(<[RunSummary]>::to_vec).collect();

    create_dir(&a.out)?;
    let scree = preps[0].selection.as_ref().map(|s| s.rows.as_slice());
    for (m, runs) in methods.iter().zip(&per_method) {
        emit_report(&a.out.join(m.name()), &ReportInputs { method: m.name(), runs, scree })?;
    }

    let perf: Vec<Vec<f64>> = per_method.iter().map(|r| r.iter().map(|s| s.with.performance).collect()).collect();
    let stats: Vec<_> = perf.iter().map(|p| summarize(p)).collect();
    let relative = relative_to_best(&stats.iter().map(|s| s.mean).collect::<Vec<_>>());
    let path = a.out.join("comparison.csv");
    let mut w = csv::Writer::from_path(&path).map_err(dcpl_core::DcplError::from)?;
    w.write_record(["method", "performance_mean", "performance_se", "relative", "seeds"]).map_err(dcpl_core::DcplError::from)?;
    for ((m, s), rel) in methods.iter().zip(&stats).zip(&relative) {
        let se = s.se.map_or(String::new(), |v| v.to_string());
        w.write_record([m.name().to_string(), s.mean.to_string(), se, rel.to_string(), seeds.len().to_string()])
            .map_err(dcpl_core::DcplError::from)?;
    }
    w.flush().map_err(|e| io(&path, e))?;

    let path = a.out.join("sign_tests.csv");
    let mut w = csv::Writer::from_path(&path).map_err(dcpl_core::DcplError::from)?;
    w.write_record(["method", "versus", "wins", "pairs", "p_value"]).map_err(dcpl_core::DcplError::from)?;
    for i in 0..methods.len() {
        for j in 0..methods.len() {
            if i != j {
                let (wins, n, p) = sign_test(&perf[i], &perf[j]);
                w.serialize((methods[i].name(), methods[j].name(), wins, n, p)).map_err(dcpl_core::DcplError::from)?;
            }
        }
    }
    w.flush().map_err(|e| io(&path, e))?;

    let best = relative.iter().position(|&r| r == 100.0).map_or("-", |i| methods[i].name());
    Ok(format!("compare: {} methods x {} seeds, best {best} -> {}", methods.len(), seeds.len(), a.out.display()))
}
