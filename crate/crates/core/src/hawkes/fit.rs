//! Maximum-likelihood estimation of exponential-kernel Hawkes processes.
//!
//! The log-likelihood separates over the receiving dimension `i`: column `i`
//! of `Φ` and the base rates `μ_{h,i}` of the labels sharing the kernel only
//! appear in terms for events of `i`. Each column is a small concave problem
//! solved by projected gradient ascent (diagonally scaled) with Armijo
//! backtracking onto the nonnegative orthant.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{event_dimension, HawkesModel, Kernel, Process, ProcessParams};
use crate::data::{Event, EventLog, Network};
use crate::error::{DcplError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Candidate decays; when set, one decay per activity kind is chosen by
    /// held-out log-likelihood.
    pub omega_grid: Option<Vec<f64>>,
    /// Decay used when no grid is given.
    pub omega: f64,
    /// Per-process decay overrides (no grid).
    pub omega_per_process: BTreeMap<Process, f64>,
    /// Rank of the retweet kernel factorization.
    pub rank: usize,
    pub iterations: usize,
    /// Base rate assigned to processes without any events.
    pub mu_floor: f64,
    pub max_spectral_radius: f64,
    pub heldout_fraction: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            omega_grid: None,
            omega: 1.0,
            omega_per_process: BTreeMap::new(),
            rank: 8,
            iterations: 500,
            mu_floor: 1e-4,
            max_spectral_radius: 0.95,
            heldout_fraction: 0.2,
            seed: 0,
        }
    }
}

impl FitConfig {
    fn omega_for(&self, p: Process) -> f64 {
        self.omega_per_process.get(&p).copied().unwrap_or(self.omega)
    }
}

/// Which sources may excite a receiver.
#[derive(Clone, Copy)]
enum Support<'a> {
    /// `Φ[j][i] > 0` only if `i` follows `j`.
    Followed(&'a Network),
    /// Every pair, including self-excitation.
    All,
}

impl Support<'_> {
    fn sources(&self, n: usize, i: usize) -> Vec<usize> {
        match self {
            Support::Followed(net) => net.following(i).to_vec(),
            Support::All => (0..n).collect(),
        }
    }
}

/// Result of fitting a group of processes that share one kernel.
#[derive(Debug, Clone)]
pub struct ProcessFit {
    pub mu: Vec<DVector<f64>>,
    pub omega: Vec<f64>,
    pub kernel: DMatrix<f64>,
    pub log_likelihood: f64,
}

/// Per-label sufficient statistics of one receiving column.
struct LabelColumn {
    /// Row-major `n_events × sources` excitation features at each event.
    features: Vec<f64>,
    n_events: usize,
    /// `∫` of each source's kernel mass over the window.
    compensator: Vec<f64>,
    duration: f64,
}

struct ColumnProblem {
    labels: Vec<LabelColumn>,
    n_sources: usize,
}

impl ColumnProblem {
    fn n_params(&self) -> usize {
        self.labels.len() + self.n_sources
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let nl = self.labels.len();
        let phi = &theta[nl..];
        let mut total = 0.0;
        for (l, lab) in self.labels.iter().enumerate() {
            let mu = theta[l];
            for e in 0..lab.n_events {
                let x = &lab.features[e * self.n_sources..(e + 1) * self.n_sources];
                let lam = mu + dot(x, phi);
                if lam <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                total += lam.ln();
            }
            total -= mu * lab.duration + dot(&lab.compensator, phi);
        }
        total
    }

    /// Gradient and the magnitude of the Hessian diagonal.
    fn gradient(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let nl = self.labels.len();
        let ns = self.n_sources;
        let phi = &theta[nl..];
        let mut grad = vec![0.0; nl + ns];
        let mut curv = vec![0.0; nl + ns];
        for (l, lab) in self.labels.iter().enumerate() {
            let mu = theta[l];
            for e in 0..lab.n_events {
                let x = &lab.features[e * ns..(e + 1) * ns];
                let lam = (mu + dot(x, phi)).max(1e-300);
                let inv = 1.0 / lam;
                grad[l] += inv;
                curv[l] += inv * inv;
                for (k, &xk) in x.iter().enumerate() {
                    if xk != 0.0 {
                        grad[nl + k] += xk * inv;
                        curv[nl + k] += xk * xk * inv * inv;
                    }
                }
            }
            grad[l] -= lab.duration;
            for k in 0..ns {
                grad[nl + k] -= lab.compensator[k];
            }
        }
        (grad, curv)
    }

    fn initial(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.n_params()];
        for (l, lab) in self.labels.iter().enumerate() {
            theta[l] = if lab.n_events > 0 {
                0.8 * lab.n_events as f64 / lab.duration
            } else {
                0.0
            };
        }
        for k in 0..self.n_sources {
            theta[self.labels.len() + k] = 0.01;
        }
        theta
    }

    fn solve(&self, iterations: usize) -> (Vec<f64>, f64) {
        let mut theta = self.initial();
        let mut f = self.objective(&theta);
        if !f.is_finite() {
            // only happens with events but no positive rate; start from flat rates
            for l in 0..self.labels.len() {
                theta[l] = theta[l].max(1e-3);
            }
            f = self.objective(&theta);
        }
        for _ in 0..iterations {
            let (grad, curv) = self.gradient(&theta);
            let dir: Vec<f64> = grad
                .iter()
                .zip(&curv)
                .zip(&theta)
                .map(|((g, c), th)| {
                    let d = g / c.max(1e-12);
                    if *th <= 0.0 && d < 0.0 {
                        0.0
                    } else {
                        d
                    }
                })
                .collect();
            if dir.iter().all(|d| *d == 0.0) {
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            while step > 1e-14 {
                let cand: Vec<f64> = theta
                    .iter()
                    .zip(&dir)
                    .map(|(th, d)| (th + step * d).max(0.0))
                    .collect();
                let fc = self.objective(&cand);
                let ascent: f64 = grad
                    .iter()
                    .zip(cand.iter().zip(&theta))
                    .map(|(g, (c, t))| g * (c - t))
                    .sum();
                if fc.is_finite() && fc >= f + 1e-4 * ascent {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            let gain = fc - f;
            theta = cand;
            f = fc;
            if gain <= 1e-12 * f.abs().max(1.0) {
                break;
            }
        }
        (theta, f)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds per-column statistics for one label stream over `[a, b)`, using
/// earlier events of the stream as history.
fn label_columns(
    stream: &[(f64, usize)],
    n: usize,
    omega: f64,
    a: f64,
    b: f64,
    sources: &[Vec<usize>],
) -> Vec<LabelColumn> {
    let mut cols: Vec<LabelColumn> = sources
        .iter()
        .map(|s| LabelColumn {
            features: Vec::new(),
            n_events: 0,
            compensator: vec![0.0; s.len()],
            duration: b - a,
        })
        .collect();
    let mut level = vec![0.0; n];
    let mut stamp = vec![f64::NEG_INFINITY; n];
    let mut mass = vec![0.0; n];
    for &(t, dim) in stream {
        if t >= b {
            break;
        }
        if t >= a {
            let col = &mut cols[dim];
            for &j in &sources[dim] {
                let v = if stamp[j].is_finite() {
                    level[j] * (-omega * (t - stamp[j])).exp()
                } else {
                    0.0
                };
                col.features.push(v);
            }
            col.n_events += 1;
        }
        level[dim] = if stamp[dim].is_finite() {
            level[dim] * (-omega * (t - stamp[dim])).exp()
        } else {
            0.0
        } + omega;
        stamp[dim] = t;
        mass[dim] += (-omega * (a - t).max(0.0)).exp() - (-omega * (b - t)).exp();
    }
    for (i, col) in cols.iter_mut().enumerate() {
        for (k, &j) in sources[i].iter().enumerate() {
            col.compensator[k] = mass[j];
        }
    }
    cols
}

fn streams(events: &[Event], processes: &[Process]) -> Vec<Vec<(f64, usize)>> {
    let mut out = vec![Vec::new(); processes.len()];
    for e in events {
        if let Some((p, dim)) = event_dimension(e) {
            if let Some(pos) = processes.iter().position(|&q| q == p) {
                out[pos].push((e.t, dim));
            }
        }
    }
    out
}

fn build_problems(
    streams: &[Vec<(f64, usize)>],
    omegas: &[f64],
    n: usize,
    a: f64,
    b: f64,
    sources: &[Vec<usize>],
) -> Vec<ColumnProblem> {
    let per_label: Vec<Vec<LabelColumn>> = streams
        .iter()
        .zip(omegas)
        .map(|(s, &w)| label_columns(s, n, w, a, b, sources))
        .collect();
    let mut problems: Vec<ColumnProblem> = sources
        .iter()
        .map(|s| ColumnProblem {
            labels: Vec::new(),
            n_sources: s.len(),
        })
        .collect();
    for label in per_label {
        for (i, col) in label.into_iter().enumerate() {
            problems[i].labels.push(col);
        }
    }
    problems
}

/// Fits base rates per process and one shared kernel over `[a, b)`.
fn fit_group_window(
    events: &[Event],
    processes: &[Process],
    omegas: &[f64],
    n: usize,
    window: (f64, f64),
    support: Support<'_>,
    iterations: usize,
) -> ProcessFit {
    let (a, b) = window;
    let sources: Vec<Vec<usize>> = (0..n).map(|i| support.sources(n, i)).collect();
    let streams = streams(events, processes);
    let problems = build_problems(&streams, omegas, n, a, b, &sources);
    let solved: Vec<(Vec<f64>, f64)> = problems.par_iter().map(|p| p.solve(iterations)).collect();
    let nl = processes.len();
    let mut mu = vec![DVector::zeros(n); nl];
    let mut kernel = DMatrix::zeros(n, n);
    let mut ll = 0.0;
    for (i, (theta, f)) in solved.iter().enumerate() {
        for l in 0..nl {
            mu[l][i] = theta[l];
        }
        for (k, &j) in sources[i].iter().enumerate() {
            kernel[(j, i)] = theta[nl + k];
        }
        ll += f;
    }
    ProcessFit {
        mu,
        omega: omegas.to_vec(),
        kernel,
        log_likelihood: ll,
    }
}

/// Log-likelihood over `[a, b)` of fixed parameters, with earlier events as history.
fn group_log_likelihood(
    events: &[Event],
    processes: &[Process],
    fit: &ProcessFit,
    n: usize,
    window: (f64, f64),
    support: Support<'_>,
) -> f64 {
    let (a, b) = window;
    let sources: Vec<Vec<usize>> = (0..n).map(|i| support.sources(n, i)).collect();
    let streams = streams(events, processes);
    let problems = build_problems(&streams, &fit.omega, n, a, b, &sources);
    problems
        .iter()
        .enumerate()
        .map(|(i, prob)| {
            let mut theta: Vec<f64> = fit.mu.iter().map(|m| m[i]).collect();
            theta.extend(sources[i].iter().map(|&j| fit.kernel[(j, i)]));
            prob.objective(&theta)
        })
        .sum()
}

/// Fits processes sharing a kernel. With a decay grid, each candidate is fit
/// on the leading part of the window and scored on the held-out tail; the
/// winner is refit on the full window.
pub fn fit_process_group(
    events: &[Event],
    processes: &[Process],
    n: usize,
    window: (f64, f64),
    net: Option<&Network>,
    cfg: &FitConfig,
) -> ProcessFit {
    let support = match net {
        Some(net) => Support::Followed(net),
        None => Support::All,
    };
    let omegas: Vec<f64> = match &cfg.omega_grid {
        Some(grid) if !grid.is_empty() => {
            let (a, b) = window;
            let split = a + (1.0 - cfg.heldout_fraction) * (b - a);
            let mut best = (f64::NEG_INFINITY, grid[0]);
            for &w in grid {
                let omegas = vec![w; processes.len()];
                let head = fit_group_window(events, processes, &omegas, n, (a, split), support, cfg.iterations);
                let score = group_log_likelihood(events, processes, &head, n, (split, b), support);
                if score > best.0 {
                    best = (score, w);
                }
            }
            vec![best.1; processes.len()]
        }
        _ => processes.iter().map(|&p| cfg.omega_for(p)).collect(),
    };
    fit_group_window(events, processes, &omegas, n, window, support, cfg.iterations)
}

/// Nonnegative factorization `m ≈ U Vᵀ` by multiplicative updates.
pub fn nmf(m: &DMatrix<f64>, rank: usize, iterations: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let rank = rank.max(1);
    let mean = m.mean().max(0.0);
    if mean == 0.0 {
        return (DMatrix::zeros(rows, rank), DMatrix::zeros(cols, rank));
    }
    let scale = (mean / rank as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = DMatrix::from_fn(rows, rank, |_, _| scale * (0.5 + rng.gen::<f64>()));
    let mut v = DMatrix::from_fn(cols, rank, |_, _| scale * (0.5 + rng.gen::<f64>()));
    let eps = 1e-300;
    let mut prev = f64::INFINITY;
    for it in 0..iterations {
        let num = m * &v;
        let den = &u * v.tr_mul(&v);
        u.zip_apply(&num.component_div(&den.add_scalar(eps)), |x, r| *x *= r);
        let num = m.tr_mul(&u);
        let den = &v * u.tr_mul(&u);
        v.zip_apply(&num.component_div(&den.add_scalar(eps)), |x, r| *x *= r);
        if it % 10 == 9 {
            let err = (m - &u * v.transpose()).norm();
            if (prev - err).abs() <= 1e-12 * m.norm().max(1e-300) {
                break;
            }
            prev = err;
        }
    }
    (u, v)
}

/// Fits all five processes on the events of `log` inside `window`.
///
/// Tweets and likes use kernels supported on follower edges; the retweet
/// kernel is fit over all pairs then factorized to the configured rank.
/// Kernels are rescaled to `cfg.max_spectral_radius` when they exceed it.
pub fn fit(log: &EventLog, net: &Network, window: (f64, f64), cfg: &FitConfig) -> Result<HawkesModel> {
    let n = net.n_users();
    if !(window.1 > window.0) {
        return Err(DcplError::invalid("fit window is empty"));
    }
    let events = log.before(window.1);
    let groups: [(&[Process], Option<&Network>); 3] = [
        (&[Process::FakeTweet, Process::TrueTweet], Some(net)),
        (&[Process::FakeRetweet, Process::TrueRetweet], None),
        (&[Process::Like], Some(net)),
    ];
    let fits: Vec<ProcessFit> = groups
        .par_iter()
        .map(|(procs, support)| fit_process_group(events, procs, n, window, *support, cfg))
        .collect();

    let counts = {
        let mut c = [0usize; 5];
        for e in log.window(window.0, window.1) {
            if let Some((p, _)) = event_dimension(e) {
                c[p.index()] += 1;
            }
        }
        c
    };

    let mut params: Vec<ProcessParams> = Vec::with_capacity(5);
    for ((procs, _), fit) in groups.iter().zip(fits) {
        let group_events: usize = procs.iter().map(|p| counts[p.index()]).sum();
        let mut kernel = if group_events == 0 {
            Kernel::zeros(n)
        } else if procs[0] == Process::FakeRetweet {
            let rank = cfg.rank.clamp(1, n.max(1));
            let (u, v) = nmf(&fit.kernel, rank, 2000, cfg.seed);
            Kernel::LowRank { u, v }
        } else {
            Kernel::Dense(fit.kernel)
        };
        let rho = kernel.spectral_radius();
        if rho > cfg.max_spectral_radius {
            kernel.scale(cfg.max_spectral_radius / rho);
        }
        for (l, &p) in procs.iter().enumerate() {
            let mu = if counts[p.index()] == 0 {
                warn!("process {} has no events in the fit window; using floor rate", p.name());
                DVector::from_element(n, cfg.mu_floor)
            } else {
                fit.mu[l].clone()
            };
            params.push(ProcessParams {
                mu,
                omega: fit.omega[l],
                kernel: kernel.clone(),
            });
        }
    }
    let params: [ProcessParams; 5] = params.try_into().expect("five processes");
    HawkesModel::new(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, StagePartition};
    use crate::hawkes::{simulate, SimulationConfig};

    fn single_process_model(mu: Vec<f64>, phi: DMatrix<f64>, omega: f64) -> HawkesModel {
        let n = mu.len();
        let mut params = [(); 5].map(|_| ProcessParams::poisson(DVector::zeros(n)));
        params[Process::FakeTweet.index()] = ProcessParams {
            mu: DVector::from_vec(mu),
            omega,
            kernel: Kernel::Dense(phi),
        };
        HawkesModel::new(params).unwrap()
    }

    fn complete(n: usize) -> Network {
        let edges = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
        Network::from_edges(n, edges).unwrap()
    }

    #[test]
    fn poisson_recovery() {
        let n = 2;
        let model = single_process_model(vec![2.0; n], DMatrix::zeros(n, n), 10.0);
        let net = complete(n);
        let part = StagePartition::new(0.0, 500.0, 1.0).unwrap();
        let log = simulate(&model, &net, part, &EventLog::default(), &[], 4, SimulationConfig::default()).unwrap();
        let cfg = FitConfig {
            omega: 10.0,
            ..FitConfig::default()
        };
        let fit = fit_process_group(log.events(), &[Process::FakeTweet], n, (0.0, 500.0), None, &cfg);
        for i in 0..n {
            assert!((fit.mu[0][i] - 2.0).abs() / 2.0 < 0.1, "mu {}", fit.mu[0][i]);
        }
        assert!(fit.kernel.norm() < 0.05, "phi {}", fit.kernel);
    }

    #[test]
    fn two_user_kernel_recovery_median_over_seeds() {
        let truth = DMatrix::from_row_slice(2, 2, &[0.0, 0.4, 0.3, 0.0]);
        let model = single_process_model(vec![0.5, 0.5], truth.clone(), 1.0);
        let net = complete(2);
        let part = StagePartition::new(0.0, 2000.0, 1.0).unwrap();
        let mut est01 = Vec::new();
        let mut est10 = Vec::new();
        for seed in 0..5 {
            let log = simulate(&model, &net, part, &EventLog::default(), &[], seed, SimulationConfig::default()).unwrap();
            let fit = fit_process_group(log.events(), &[Process::FakeTweet], 2, (0.0, 2000.0), Some(&net), &FitConfig::default());
            est01.push(fit.kernel[(0, 1)]);
            est10.push(fit.kernel[(1, 0)]);
        }
        let median = |v: &mut Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        assert!((median(&mut est01) - 0.4).abs() <= 0.15, "{est01:?}");
        assert!((median(&mut est10) - 0.3).abs() <= 0.15, "{est10:?}");
    }

    #[test]
    fn support_restricted_to_followed_sources() {
        let n = 3;
        let net = Network::from_edges(n, [(0, 1)]).unwrap();
        let events: Vec<Event> = (0..200)
            .map(|k| Event::tweet(k as f64 * 0.5, k % n, Label::Fake))
            .collect();
        let fit = fit_process_group(&events, &[Process::FakeTweet], n, (0.0, 100.0), Some(&net), &FitConfig::default());
        for j in 0..n {
            for i in 0..n {
                if !net.edge(j, i) {
                    assert_eq!(fit.kernel[(j, i)], 0.0);
                }
            }
        }
    }

    #[test]
    fn nmf_recovers_rank_one() {
        let u = DVector::from_vec(vec![0.1, 0.5, 0.3, 0.05, 0.2]);
        let v = DVector::from_vec(vec![0.4, 0.1, 0.2, 0.3, 0.6]);
        let m = &u * v.transpose();
        let (uf, vf) = nmf(&m, 1, 2000, 7);
        let rel = (&m - &uf * vf.transpose()).norm() / m.norm();
        assert!(rel < 0.1, "relative error {rel}");
        assert!(uf.iter().chain(vf.iter()).all(|x| *x >= 0.0));
    }

    #[test]
    fn empty_process_gets_floor() {
        let n = 3;
        let net = complete(n);
        let log = EventLog::new(vec![Event::tweet(1.0, 0, Label::True), Event::tweet(2.0, 1, Label::True)]);
        let model = fit(&log, &net, (0.0, 10.0), &FitConfig::default()).unwrap();
        let fake = model.params(Process::FakeTweet);
        assert!(fake.mu.iter().all(|m| *m == 1e-4));
        let like = model.params(Process::Like);
        assert_eq!(like.kernel.dense().norm(), 0.0);
        assert!(matches!(model.params(Process::TrueRetweet).kernel, Kernel::Dense(_)));
    }

    #[test]
    fn omega_grid_prefers_true_decay() {
        let n = 2;
        let truth = DMatrix::from_row_slice(2, 2, &[0.3, 0.3, 0.3, 0.3]);
        let model = single_process_model(vec![0.5, 0.5], truth, 4.0);
        let net = complete(n);
        let part = StagePartition::new(0.0, 1500.0, 1.0).unwrap();
        let log = simulate(&model, &net, part, &EventLog::default(), &[], 12, SimulationConfig::default()).unwrap();
        let cfg = FitConfig {
            omega_grid: Some(vec![0.25, 4.0, 64.0]),
            ..FitConfig::default()
        };
        let fit = fit_process_group(log.events(), &[Process::FakeTweet], n, (0.0, 1500.0), None, &cfg);
        assert_eq!(fit.omega, vec![4.0]);
    }
}
