//! Stage-by-stage Ogata thinning.
//!
//! Each process keeps its own excitation vector, so processes are independent
//! in law; the fixed per-stage order (tweets F/T, retweets F/T, likes) matters
//! only for retweet attribution, which looks at posts already generated.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{residual_excitation, HawkesModel, InterventionPlan, Process};
use crate::data::{Event, EventLog, Kind, Label, Network, StagePartition};
use crate::error::{DcplError, Result};

#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig {
    /// Abort when a single stage produces more events than this.
    pub stage_event_cap: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            stage_event_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Post {
    t: f64,
    user: usize,
    label: Label,
}

pub struct Simulator<'a> {
    model: &'a HawkesModel,
    net: &'a Network,
    part: StagePartition,
    cfg: SimulationConfig,
    kernels: Vec<DMatrix<f64>>,
    excitation: Vec<DVector<f64>>,
    recent: Vec<Post>,
    next_stage: usize,
    generated: Vec<Event>,
    /// One stream per process, so changing one process's intensity leaves
    /// the draws of the others untouched.
    rngs: Vec<ChaCha8Rng>,
}

impl<'a> Simulator<'a> {
    /// Starts a simulation at `part.start`, seeded with the excitation left by
    /// `history` (events at or after the start are ignored).
    pub fn new(
        model: &'a HawkesModel,
        net: &'a Network,
        part: StagePartition,
        history: &EventLog,
        seed: u64,
        cfg: SimulationConfig,
    ) -> Result<Self> {
        if net.n_users() != model.n_users() {
            return Err(DcplError::Dimension {
                expected: model.n_users(),
                got: net.n_users(),
            });
        }
        model.check_stable()?;
        let past = history.before(part.start);
        let mut excitation = Vec::with_capacity(5);
        for p in Process::ALL {
            excitation.push(residual_excitation(model, p, past, part.start)?.values);
        }
        let recent = history
            .window(part.start - part.dt, part.start)
            .iter()
            .filter_map(|e| match (e.kind, e.label) {
                (Kind::Tweet | Kind::Retweet, Some(label)) => Some(Post {
                    t: e.t,
                    user: e.user,
                    label,
                }),
                _ => None,
            })
            .collect();
        Ok(Simulator {
            model,
            net,
            part,
            cfg,
            kernels: Process::ALL.iter().map(|&p| model.params(p).kernel.dense()).collect(),
            excitation,
            recent,
            next_stage: 0,
            generated: Vec::new(),
            rngs: Process::ALL
                .iter()
                .map(|p| {
                    let mut r = ChaCha8Rng::seed_from_u64(seed);
                    r.set_stream(p.index() as u64);
                    r
                })
                .collect(),
        })
    }

    pub fn next_stage(&self) -> usize {
        self.next_stage
    }

    pub fn is_done(&self) -> bool {
        self.next_stage >= self.part.n_stages
    }

    /// All events generated so far.
    pub fn events(&self) -> &[Event] {
        &self.generated
    }

    pub fn into_log(self) -> EventLog {
        EventLog::new(self.generated)
    }

    /// Simulates the next stage and returns its events in time order.
    pub fn step(&mut self, plan: Option<&InterventionPlan>) -> Result<&[Event]> {
        if self.is_done() {
            return Err(DcplError::invalid("simulation window exhausted"));
        }
        let stage = self.next_stage;
        let (a, b) = self.part.stage_window(stage);
        let horizon = a - self.part.dt;
        self.recent.retain(|p| p.t >= horizon);

        let mut stage_events = Vec::new();
        for p in Process::ALL {
            let prm = self.model.params(p);
            let mut base = prm.mu.clone();
            if let Some(extra) = plan.and_then(|pl| pl.for_process(p)) {
                if extra.len() != base.len() {
                    return Err(DcplError::Dimension {
                        expected: base.len(),
                        got: extra.len(),
                    });
                }
                for (b, x) in base.iter_mut().zip(extra) {
                    *b += x.max(0.0);
                }
            }
            let budget = self.cfg.stage_event_cap.saturating_sub(stage_events.len());
            let raw = self.thin(p, &base, a, b, budget).map_err(|e| {
                e.context(format!("stage {stage} (t = {a}..{b})"))
            })?;
            for (t, dim) in raw {
                match p.kind() {
                    Kind::Tweet => {
                        let label = p.label().expect("tweet label");
                        self.recent.push(Post { t, user: dim, label });
                        stage_events.push(Event::tweet(t, dim, label));
                    }
                    Kind::Retweet => {
                        let label = p.label().expect("retweet label");
                        if let Some(target) = self.retweet_target(p, t, dim, label) {
                            self.recent.push(Post { t, user: dim, label });
                            stage_events.push(Event::retweet(t, dim, label, target));
                        }
                    }
                    Kind::Like => {
                        let fans = self.net.followers(dim);
                        if !fans.is_empty() {
                            let liker = fans[self.rngs[p.index()].gen_range(0..fans.len())];
                            stage_events.push(Event::like(t, liker, dim));
                        }
                    }
                }
            }
        }
        stage_events.sort_by(|x, y| x.t.total_cmp(&y.t));
        let first = self.generated.len();
        self.generated.extend(stage_events);
        self.next_stage += 1;
        Ok(&self.generated[first..])
    }

    /// Thins process `p` over `[a, b)` with constant base rates, returning
    /// `(time, dimension)` pairs and leaving the excitation decayed to `b`.
    fn thin(&mut self, p: Process, base: &DVector<f64>, a: f64, b: f64, cap: usize) -> Result<Vec<(f64, usize)>> {
        let omega = self.model.params(p).omega;
        let idx = p.index();
        let base_total: f64 = base.sum();
        let mut out = Vec::new();
        let mut t = a;
        loop {
            let h = &mut self.excitation[idx];
            let upper = base_total + h.sum();
            if upper <= 0.0 {
                *h *= (-omega * (b - t)).exp();
                break;
            }
            let u: f64 = self.rngs[idx].gen();
            let wait = -(1.0 - u).ln() / upper;
            if t + wait >= b {
                *h *= (-omega * (b - t)).exp();
                break;
            }
            t += wait;
            *h *= (-omega * wait).exp();
            let total = base_total + h.sum();
            let accept: f64 = self.rngs[idx].gen::<f64>() * upper;
            if accept > total {
                continue;
            }
            let mut pick = self.rngs[idx].gen::<f64>() * total;
            let mut dim = base.len() - 1;
            for i in 0..base.len() {
                let lam = base[i] + h[i];
                if pick < lam {
                    dim = i;
                    break;
                }
                pick -= lam;
            }
            let row = self.kernels[idx].row(dim);
            for (hi, k) in h.iter_mut().zip(row.iter()) {
                *hi += omega * k;
            }
            out.push((t, dim));
            if out.len() > cap {
                return Err(DcplError::Unstable {
                    process: p.name().into(),
                    detail: format!("more than {} events in one stage", self.cfg.stage_event_cap),
                });
            }
        }
        Ok(out)
    }

    /// Author whose post the retweet at `t` by `user` reshares.
    fn retweet_target(&mut self, p: Process, t: f64, user: usize, label: Label) -> Option<usize> {
        let since = t - self.part.dt;
        let mut same_label: BTreeMap<usize, f64> = BTreeMap::new();
        let mut any_label: BTreeMap<usize, ()> = BTreeMap::new();
        for post in &self.recent {
            if post.t < since || post.t >= t || post.user == user {
                continue;
            }
            any_label.insert(post.user, ());
            if post.label == label {
                *same_label.entry(post.user).or_insert(0.0) += 1.0;
            }
        }
        let kernel = &self.kernels[p.index()];
        let weighted: Vec<(usize, f64)> = same_label
            .iter()
            .map(|(&j, &count)| (j, kernel[(j, user)] * count))
            .collect();
        let total: f64 = weighted.iter().map(|(_, w)| w).sum();
        if total > 0.0 {
            let mut pick = self.rngs[p.index()].gen::<f64>() * total;
            for &(j, w) in &weighted {
                if pick < w {
                    return Some(j);
                }
                pick -= w;
            }
            return weighted.iter().rev().find(|(_, w)| *w > 0.0).map(|(j, _)| *j);
        }
        if !same_label.is_empty() {
            let keys: Vec<usize> = same_label.keys().copied().collect();
            return Some(keys[self.rngs[p.index()].gen_range(0..keys.len())]);
        }
        let most_followed = |candidates: &mut dyn Iterator<Item = usize>| {
            candidates.max_by(|&x, &y| {
                self.net
                    .followers(x)
                    .len()
                    .cmp(&self.net.followers(y).len())
                    .then(y.cmp(&x))
            })
        };
        if let Some(j) = most_followed(&mut any_label.keys().copied()) {
            return Some(j);
        }
        most_followed(&mut (0..self.net.n_users()).filter(|&j| j != user))
    }
}

/// Simulates every stage of `part` after `history`. `plans` are matched to
/// stages by their `stage` field; stages without a plan get no intervention.
pub fn simulate(
    model: &HawkesModel,
    net: &Network,
    part: StagePartition,
    history: &EventLog,
    plans: &[InterventionPlan],
    seed: u64,
    cfg: SimulationConfig,
) -> Result<EventLog> {
    let mut sim = Simulator::new(model, net, part, history, seed, cfg)?;
    while !sim.is_done() {
        let stage = sim.next_stage();
        let plan = plans.iter().find(|p| p.stage == stage);
        sim.step(plan)?;
    }
    Ok(sim.into_log())
}
