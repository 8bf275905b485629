//! Acceptance criteria. Runs as a plain binary so every criterion prints a
//! PASS/FAIL line even when an earlier one fails.
//!
//! `cargo test --release -p dcpl-core --test acceptance` runs all of them;
//! `... -- 1 5 12` runs a subset.

use std::process::ExitCode;
use std::time::Instant;

use dcpl_core::clustering::{self, ari, nmi, select_num_clusters, standardize, update_clusters};
use dcpl_core::config::RunConfig;
use dcpl_core::data::{EventLog, Network, StagePartition};
use dcpl_core::eval::sign_test;
use dcpl_core::hawkes::{self, simulate, FitConfig, HawkesModel, InterventionPlan, Kernel, MeanPropagator, Process, ProcessParams, SimulationConfig};
use dcpl_core::pipeline::{evaluate_method, fit_model, load_data, prepare, sub_seed, train_method, Prepared};
use dcpl_core::policy::{episode_gradients, episode_objectives, run_stage, user_interventions, ClusterActions, Coupling, InputScaling, PolicyNet, RewardModel, StageInputs, ValueNet};
use dcpl_core::synthetic::{generate, SyntheticConfig};
use dcpl_core::trainer::{Method, ReclusterSchedule};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic20")
}

fn fixture_config() -> RunConfig {
    RunConfig::load(fixture_dir().join("config.json")).expect("fixture config")
}

fn fixture_data(cfg: &RunConfig) -> (EventLog, Network) {
    load_data(cfg.data.events.as_ref().unwrap(), cfg.data.network.as_ref().unwrap(), cfg.data.n_users).expect("fixture data")
}

fn single_process(n: usize, p: Process, mu: DVector<f64>, kernel: DMatrix<f64>, omega: f64) -> HawkesModel {
    let mut params = [(); 5].map(|_| ProcessParams::poisson(DVector::zeros(n)));
    params[p.index()] = ProcessParams { mu, omega, kernel: Kernel::Dense(kernel) };
    HawkesModel::new(params).unwrap()
}

/// Asymptotic Kolmogorov p-value with the Stephens correction.
fn ks_exponential_p(samples: &mut [f64]) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in samples.iter().enumerate() {
        let f = 1.0 - (-x).exp();
        d = d.max((k as f64 + 1.0) / n - f).max(f - k as f64 / n);
    }
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        p += 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

fn c1_poisson() -> Outcome {
    let n = 5;
    let model = HawkesModel::poisson([(); 5].map(|_| DVector::from_element(n, 1.0))).unwrap();
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let net = Network::from_edges(n, edges).unwrap();
    let part = StagePartition::new(0.0, 1000.0, 1.0).unwrap();
    let bound = 3.0 * 1000f64.sqrt();
    let mut good = 0;
    let mut trials = 0;
    let mut gaps = Vec::new();
    for seed in 0..20 {
        let log = simulate(&model, &net, part, &EventLog::default(), &[], seed, SimulationConfig::default()).unwrap();
        for p in Process::ALL {
            let mut counts = vec![0usize; n];
            let mut last = vec![None::<f64>; n];
            for e in log.iter() {
                if hawkes::event_dimension(e).map(|(q, _)| q) == Some(p) {
                    counts[e.user] += 1;
                    if let Some(t) = last[e.user] {
                        gaps.push(e.t - t);
                    }
                    last[e.user] = Some(e.t);
                }
            }
            trials += 1;
            if counts.iter().all(|&c| (c as f64 - 1000.0).abs() <= bound) {
                good += 1;
            }
        }
    }
    let frac = good as f64 / trials as f64;
    let (d, p) = ks_exponential_p(&mut gaps);
    outcome(
        frac >= 0.95 && p >= 0.01,
        format!("{good}/{trials} (run, process) pairs with every user within 3√1000; KS D = {d:.5}, p = {p:.3} over {} gaps", gaps.len()),
    )
}

fn c2_expected_counts() -> Outcome {
    let n = 10;
    let stages = 3;
    let dt = 2.0;
    let reps = 5000;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for inst in 0..5 {
        let mut phi = DMatrix::from_fn(n, n, |_, _| if rng.gen::<f64>() < 0.4 { rng.gen::<f64>() } else { 0.0 });
        let rho = hawkes::spectral_radius(&phi);
        phi *= 0.6 * rng.gen_range(0.5..1.0) / rho;
        let mu = DVector::from_fn(n, |_, _| rng.gen_range(0.2..1.0));
        let omega = rng.gen_range(0.5..2.0);
        let model = single_process(n, Process::TrueTweet, mu.clone(), phi, omega);
        let plan = InterventionPlan {
            stage: 1,
            tweet: (0..n).map(|_| rng.gen_range(0.0..0.5)).collect(),
            retweet: vec![0.0; n],
            budget_tweet: 0.0,
            budget_retweet: 0.0,
        };
        let prop = MeanPropagator::new(model.params(Process::TrueTweet), dt).unwrap();
        let mut g = DVector::zeros(n);
        let mut expected = Vec::new();
        for k in 0..stages {
            let mut u = mu.clone();
            if k == plan.stage {
                u += DVector::from_column_slice(&plan.tweet);
            }
            expected.push(prop.expected_counts(&g, &u));
            g = prop.advance(&g, &u);
        }
        let net = Network::from_edges(n, Vec::new()).unwrap();
        let part = StagePartition::new(0.0, dt * stages as f64, dt).unwrap();
        let mut mc = vec![DVector::<f64>::zeros(n); stages];
        for r in 0..reps {
            let log = simulate(&model, &net, part, &EventLog::default(), std::slice::from_ref(&plan), 1_000_000 * inst + r, SimulationConfig::default()).unwrap();
            for e in log.iter() {
                let k = ((e.t / dt) as usize).min(stages - 1);
                mc[k][e.user] += 1.0;
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..stages {
            let m = &mc[k] / reps as f64;
            num += (&m - &expected[k]).norm_squared();
            den += expected[k].norm_squared();
        }
        worst = worst.max((num / den).sqrt());
    }
    outcome(worst <= 0.05, format!("worst relative L2 error {worst:.4} over 5 instances, {reps} replications each"))
}

fn c3_recovery() -> Outcome {
    let mut mu_errs = Vec::new();
    let mut phi_errs: Vec<(u64, &str, f64)> = Vec::new();
    let horizon = 2000.0;
    for seed in 0..5 {
        let cfg = SyntheticConfig {
            n_users: 20,
            horizon,
            seed: 100 + seed,
            ..Default::default()
        };
        let d = generate(&cfg).unwrap();
        let fit_cfg = FitConfig {
            rank: 2,
            max_spectral_radius: 0.99,
            ..Default::default()
        };
        let est = hawkes::fit(&d.log, &d.net, (0.0, horizon), &fit_cfg).unwrap();
        let mut errs = Vec::new();
        for p in Process::ALL {
            let (a, b) = (&d.model.params(p).mu, &est.params(p).mu);
            errs.extend(a.iter().zip(b.iter()).map(|(t, e)| (e - t).abs() / t));
        }
        errs.sort_by(f64::total_cmp);
        mu_errs.push(errs[errs.len() / 2]);
        for (name, p) in [("tweet", Process::TrueTweet), ("retweet", Process::TrueRetweet), ("like", Process::Like)] {
            let t = d.model.params(p).kernel.dense();
            let e = est.params(p).kernel.dense();
            phi_errs.push((seed, name, (&e - &t).norm() / t.norm()));
        }
    }
    let worst_mu = mu_errs.iter().cloned().fold(0.0, f64::max);
    let worst_phi = phi_errs.iter().map(|x| x.2).fold(0.0, f64::max);
    let by_kernel: Vec<String> = ["tweet", "retweet", "like"]
        .iter()
        .map(|k| {
            let v: Vec<f64> = phi_errs.iter().filter(|x| x.1 == *k).map(|x| x.2).collect();
            format!("{k} max {:.3}", v.iter().cloned().fold(0.0, f64::max))
        })
        .collect();
    outcome(
        worst_mu <= 0.20 && worst_phi <= 0.3,
        format!("median relative μ error per seed max {worst_mu:.3}; relative Frobenius Φ error {}", by_kernel.join(", ")),
    )
}

fn c4_budget() -> Outcome {
    let cfg = fixture_config();
    let (log, net) = fixture_data(&cfg);
    let model = fit_model(&cfg, &log, &net).unwrap();
    let prep = prepare(&cfg, &log, &net, model, 1, None).unwrap();
    let mut worst: f64 = 0.0;
    for m in Method::ALL {
        let t = train_method(&cfg, &prep, m).unwrap();
        worst = worst.max(t.result.max_budget_error);
        let ev = evaluate_method(&cfg, &prep, &t).unwrap();
        for p in &ev.closed.plans {
            let st: f64 = p.tweet.iter().sum();
            let sr: f64 = p.retweet.iter().sum();
            worst = worst.max((st - p.budget_tweet).abs() / p.budget_tweet.max(1.0));
            worst = worst.max((sr - p.budget_retweet).abs() / p.budget_retweet.max(1.0));
        }
    }
    let n = 7;
    let actions = ClusterActions {
        tweet: DVector::from_vec(vec![0.3, 1.7]),
        retweet: DMatrix::from_row_slice(2, 2, &[0.2, 0.5, 0.9, 0.1]),
    };
    let labels = vec![0, 1, 0, 1, 1, 0, 0];
    let phi = DMatrix::from_fn(n, n, |i, j| ((i + 2 * j) % 5) as f64 * 0.05);
    let plan = user_interventions(&actions, &labels, &DVector::zeros(n), &phi, (3.5, 2.0), Coupling::Separate, 0).unwrap();
    let uniform = plan.tweet.iter().all(|&a| a == 3.5 / n as f64) && plan.retweet.iter().all(|&a| a == 2.0 / n as f64);
    outcome(
        worst <= 1e-9 && uniform,
        format!("max relative budget error {worst:.2e} over training and evaluation plans of all 9 methods; zero-distance plan uniform = {uniform}"),
    )
}

fn c5_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 3;
    let c = 2;
    let mut params = [(); 5].map(|_| ProcessParams::poisson(DVector::zeros(n)));
    for p in params.iter_mut() {
        p.mu = DVector::from_fn(n, |_, _| 0.2 + rng.gen::<f64>());
        p.kernel = Kernel::Dense(DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 0.2));
        p.omega = 0.8 + rng.gen::<f64>();
    }
    let model = HawkesModel::new(params).unwrap();
    let net = Network::from_edges(n, [(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap();
    let rm = RewardModel::new(&model, &net, 1.0).unwrap();
    let part = StagePartition::new(0.0, 2.0, 1.0).unwrap();
    let history = simulate(&model, &net, StagePartition::new(-3.0, 0.0, 1.0).unwrap(), &EventLog::default(), &[], 9, SimulationConfig::default()).unwrap();
    let ctxs = rm.contexts(&model, &history, &part).unwrap();
    let gamma = 0.7;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for coupling in [Coupling::Separate, Coupling::Tied] {
        let policy = PolicyNet::new(5 * c, c, &[6, 5], 11);
        let value = ValueNet::new(n, &[4], InputScaling::Log1p, 12);
        let inputs: Vec<StageInputs> = (0..2)
            .map(|k| StageInputs {
                policy_input: (0..5 * c).map(|_| rng.gen::<f64>()).collect(),
                labels: if k == 0 { vec![0, 1, 0] } else { vec![1, 1, 0] },
                weights: DVector::from_fn(n, |_, _| 0.1 + rng.gen::<f64>()),
                budgets: (1.0 + k as f64, 2.0),
                coupling,
            })
            .collect();
        let records: Vec<_> = ctxs.iter().zip(&inputs).map(|(x, i)| run_stage(&policy, &value, &rm, x, i.clone(), gamma).unwrap()).collect();
        let g = episode_gradients(&policy, &value, &rm, &ctxs, &records, gamma).unwrap();
        let rel = |fd: f64, an: f64| (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
        for k in 0..g.grad_theta.len() {
            let mut p = policy.clone();
            p.mlp.params_mut()[k] += h;
            let plus = episode_objectives(&p, &value, &rm, &ctxs, &inputs, gamma).unwrap().0;
            p.mlp.params_mut()[k] -= 2.0 * h;
            let minus = episode_objectives(&p, &value, &rm, &ctxs, &inputs, gamma).unwrap().0;
            worst = worst.max(rel((plus - minus) / (2.0 * h), g.grad_theta[k]));
        }
        for k in 0..g.grad_phi.len() {
            let mut v = value.clone();
            v.mlp.params_mut()[k] += h;
            let plus = episode_objectives(&policy, &v, &rm, &ctxs, &inputs, gamma).unwrap().1;
            v.mlp.params_mut()[k] -= 2.0 * h;
            let minus = episode_objectives(&policy, &v, &rm, &ctxs, &inputs, gamma).unwrap().1;
            worst = worst.max(rel((plus - minus) / (2.0 * h), g.grad_phi[k]));
        }
    }
    outcome(worst <= 1e-4, format!("worst relative error {worst:.2e} over all θ and φ parameters, both couplings"))
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn same_training(a: &dcpl_core::pipeline::Trained, b: &dcpl_core::pipeline::Trained) -> bool {
    let (x, y) = (&a.result, &b.result);
    same_bits(x.policy.mlp.params(), y.policy.mlp.params())
        && same_bits(x.value.mlp.params(), y.value.mlp.params())
        && x.trace.len() == y.trace.len()
        && x.trace.iter().zip(&y.trace).all(|(s, t)| s.j_theta.to_bits() == t.j_theta.to_bits() && same_bits(&s.expected_rewards, &t.expected_rewards))
        && x.stage_labels == y.stage_labels
}

fn c6_reductions() -> Outcome {
    let cfg = fixture_config();
    let (log, net) = fixture_data(&cfg);
    let model = fit_model(&cfg, &log, &net).unwrap();
    let mut prep = prepare(&cfg, &log, &net, model, 4, None).unwrap();
    let nc1 = train_method(&cfg, &prep, Method::Nc1).unwrap();
    let c = prep.n_clusters;
    prep.n_clusters = 1;
    let single = train_method(&cfg, &prep, Method::KmR).unwrap();
    let one_cluster = same_training(&nc1, &single);
    prep.n_clusters = c;

    let mut never = cfg.clone();
    never.trainer.eta_e_schedule = ReclusterSchedule::never();
    let dcpl = train_method(&never, &prep, Method::Dcpl).unwrap();
    let kmr = train_method(&cfg, &prep, Method::KmR).unwrap();
    let static_dcpl = same_training(&dcpl, &kmr);

    let mut idempotent = true;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..20 {
        let n = 30;
        let x = DMatrix::from_fn(n, 4, |_, _| rng.gen::<f64>());
        let x_next = DMatrix::from_fn(n, 4, |i, f| x[(i, f)] + 0.3 * rng.gen::<f64>());
        let init = clustering::clusters_from_matrix(&x, 4, 0.0, 1.0, trial).unwrap();
        let once = update_clusters(&init, &x_next, 1e-4).unwrap();
        let twice = update_clusters(&once, &x_next, 1e-4).unwrap();
        idempotent &= once.labels == twice.labels && once.centroids == init.centroids;
    }
    outcome(
        one_cluster && static_dcpl && idempotent,
        format!("NC-1 = single cluster: {one_cluster}; DCPL without reclustering = KM-R: {static_dcpl}; ε₂ = 1 update idempotent on 20 draws: {idempotent}"),
    )
}

fn c7_contribution() -> Outcome {
    let cfg = fixture_config();
    let (log, net) = fixture_data(&cfg);
    let model = fit_model(&cfg, &log, &net).unwrap();
    let mut worst = f64::INFINITY;
    for seed in cfg.seeds.clone() {
        let prep = prepare(&cfg, &log, &net, model.clone(), seed, None).unwrap();
        let t = train_method(&cfg, &prep, Method::Dcpl).unwrap();
        worst = worst.min(t.result.min_contribution);
    }
    outcome(worst >= -1e-12, format!("smallest contribution feature {worst:.3e} over every user and stage of DCPL training"))
}

/// Settings for the ordering experiment on the 200-user two-block network.
fn ordering_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.clustering.n_clusters = Some(8);
    cfg.trainer.max_epochs = 40;
    cfg.trainer.eta_theta = 0.05;
    cfg.trainer.eta_phi = 0.05;
    cfg.trainer.checkpoint_every = 0;
    cfg.seeds = (1..=10).collect();
    cfg
}

fn ordering_data() -> (EventLog, Network) {
    let d = generate(&SyntheticConfig {
        n_users: 200,
        ..Default::default()
    })
    .unwrap();
    (d.log, d.net)
}

fn c8_ordering() -> Outcome {
    let cfg = ordering_config();
    let (log, net) = ordering_data();
    let model = fit_model(&cfg, &log, &net).unwrap();
    let methods = [Method::Dcpl, Method::KmR, Method::NcTr, Method::Rnd];
    let mut perf = vec![Vec::new(); methods.len()];
    for &seed in &cfg.seeds {
        let prep: Prepared = prepare(&cfg, &log, &net, model.clone(), seed, None).unwrap();
        for (m, &method) in methods.iter().enumerate() {
            let t = train_method(&cfg, &prep, method).unwrap();
            let ev = evaluate_method(&cfg, &prep, &t).unwrap();
            perf[m].push(ev.summary.with.performance);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for (a, b) in [(0, 1), (0, 2), (1, 3)] {
        let (wins, pairs, p) = sign_test(&perf[a], &perf[b]);
        let ok = mean(&perf[a]) > mean(&perf[b]) && p < 0.05;
        pass &= ok;
        parts.push(format!("{} > {}: {wins}/{pairs}, p = {p:.4} {}", methods[a].name(), methods[b].name(), if ok { "ok" } else { "fails" }));
    }
    let means: Vec<String> = methods.iter().zip(&perf).map(|(m, v)| format!("{} {:.0}", m.name(), mean(v))).collect();
    outcome(pass, format!("mean P {}; {}", means.join(", "), parts.join("; ")))
}

struct FixtureRuns {
    with_wins: usize,
    seeds: usize,
    mean_ari: f64,
}

fn fixture_runs(eps2: f64) -> FixtureRuns {
    let mut cfg = fixture_config();
    cfg.clustering.eps1 = 1.0 - eps2;
    cfg.clustering.eps2 = eps2;
    let (log, net) = fixture_data(&cfg);
    let model = fit_model(&cfg, &log, &net).unwrap();
    let seeds: Vec<u64> = (1..=10).collect();
    let mut with_wins = 0;
    let mut aris = Vec::new();
    for &seed in &seeds {
        let prep = prepare(&cfg, &log, &net, model.clone(), seed, None).unwrap();
        let t = train_method(&cfg, &prep, Method::Dcpl).unwrap();
        let ev = evaluate_method(&cfg, &prep, &t).unwrap();
        if ev.summary.with.performance > ev.summary.without.performance {
            with_wins += 1;
        }
        let labels = &ev.summary.stage_labels;
        let per_seed: Vec<f64> = labels.windows(2).map(|w| ari(&w[0], &w[1]).unwrap()).collect();
        aris.push(per_seed.iter().sum::<f64>() / per_seed.len() as f64);
    }
    FixtureRuns {
        with_wins,
        seeds: seeds.len(),
        mean_ari: aris.iter().sum::<f64>() / aris.len() as f64,
    }
}

fn c9_efficacy() -> Outcome {
    let r = fixture_runs(0.5);
    outcome(r.with_wins >= 8, format!("P with interventions above P without in {}/{} seeds", r.with_wins, r.seeds))
}

fn c10_alignment() -> Outcome {
    let half = fixture_runs(0.5);
    let sticky = fixture_runs(0.9);
    outcome(
        half.mean_ari >= 0.6 && sticky.mean_ari >= 0.9,
        format!("mean consecutive-stage ARI {:.3} at ε₂ = 0.5, {:.3} at ε₂ = 0.9", half.mean_ari, sticky.mean_ari),
    )
}

fn c11_selection() -> Outcome {
    let mut hits = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let centers = [[0.0, 0.0, 0.0, 0.0], [10.0, 0.0, 0.0, 0.0], [5.0, 75f64.sqrt(), 0.0, 0.0]];
        let x = DMatrix::from_fn(60, 4, |i, f| {
            let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
            centers[i / 20][f] + z
        });
        let sel = select_num_clusters(&x, &(1..=6).collect::<Vec<_>>(), seed).unwrap();
        if sel.chosen == Some(3) {
            hits += 1;
        }
    }
    let (log, net) = ordering_data();
    let cfg = ordering_config();
    let part = StagePartition::new(cfg.data.train[0], cfg.data.train[1], cfg.data.dt).unwrap();
    let train = EventLog::new(log.window(cfg.data.train[0], cfg.data.train[1]).to_vec());
    let x = standardize(&clustering::initial_features(&train, &net, &part).x);
    let candidates: Vec<usize> = (2..=15).collect();
    let chosen: Vec<Option<usize>> = (1..=10u64).map(|s| select_num_clusters(&x, &candidates, sub_seed(s, 4)).unwrap().chosen).collect();
    let in_range = chosen.iter().all(|c| matches!(c, Some(4..=12)));
    let shown: Vec<String> = chosen.iter().map(|c| c.map_or("-".into(), |v| v.to_string())).collect();
    outcome(
        hits >= 9 && in_range,
        format!("three blobs: C = 3 in {hits}/10 seeds; 200-user features: chosen C {}", shown.join(",")),
    )
}

fn ari_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut ss, mut sd, mut ds, mut dd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1.0,
                (true, false) => sd += 1.0,
                (false, true) => ds += 1.0,
                (false, false) => dd += 1.0,
            }
        }
    }
    let den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if den == 0.0 {
        1.0
    } else {
        2.0 * (ss * dd - sd * ds) / den
    }
}

fn nmi_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    if a.is_empty() {
        return 1.0;
    }
    let p = |f: &dyn Fn(usize) -> bool| (0..a.len()).filter(|&i| f(i)).count() as f64 / n;
    let la: Vec<usize> = (0..3).filter(|&v| a.contains(&v)).collect();
    let lb: Vec<usize> = (0..3).filter(|&v| b.contains(&v)).collect();
    let h = |ls: &[usize], x: &[usize]| -> f64 { ls.iter().map(|&v| p(&|i| x[i] == v)).map(|q| -q * q.ln()).sum() };
    let (ha, hb) = (h(&la, a), h(&lb, b));
    if ha == 0.0 && hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for &u in &la {
        for &v in &lb {
            let pj = p(&|i| a[i] == u && b[i] == v);
            if pj > 0.0 {
                mi += pj * (pj / (p(&|i| a[i] == u) * p(&|i| b[i] == v))).ln();
            }
        }
    }
    (mi / (0.5 * (ha + hb))).clamp(0.0, 1.0)
}

fn labelings(n: usize) -> Vec<Vec<usize>> {
    (0..3usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let d = code % 3;
                    code /= 3;
                    d
                })
                .collect()
        })
        .collect()
}

fn c12_metrics() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pairs = 0u64;
    for n in 1..=8 {
        let all = labelings(n);
        for a in &all {
            for b in &all {
                worst = worst.max((ari(a, b).unwrap() - ari_oracle(a, b)).abs());
                worst = worst.max((nmi(a, b).unwrap() - nmi_oracle(a, b)).abs());
                pairs += 1;
            }
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e} over all {pairs} labeling pairs of up to 8 points and 3 labels"))
}

type Criterion = (u32, &'static str, Option<f64>, fn() -> Outcome);

const CRITERIA: [Criterion; 12] = [
    (1, "Poisson degeneration", Some(30.0), c1_poisson),
    (2, "expected counts vs Monte Carlo", Some(300.0), c2_expected_counts),
    (3, "estimation recovery", Some(600.0), c3_recovery),
    (4, "budget invariant", None, c4_budget),
    (5, "gradient checks", None, c5_gradients),
    (6, "reductions", None, c6_reductions),
    (7, "contribution nonnegativity", None, c7_contribution),
    (8, "method ordering", Some(1800.0), c8_ordering),
    (9, "intervention efficacy", None, c9_efficacy),
    (10, "cluster alignment", None, c10_alignment),
    (11, "cluster-count selection", None, c11_selection),
    (12, "ARI/NMI oracles", None, c12_metrics),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, limit, run) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = limit.map_or(true, |l| secs < l);
        let pass = out.pass && in_time;
        let budget = limit.map_or(String::new(), |l| format!(" of {l:.0} s"));
        println!("{} criterion {id:>2} {name}: {} ({secs:.1} s{budget})", if pass { "PASS" } else { "FAIL" }, out.detail);
        ran += 1;
        if !pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
