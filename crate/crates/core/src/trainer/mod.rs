//! The training loop over stages and epochs, and the baseline variants.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    self, ari, centroids, cluster_state, network_features, standardize, update_clusters, ClusterModel,
};
use crate::data::{col, EventLog, Network, NetworkState, StagePartition};
use crate::error::{DcplError, Result};
use crate::policy::{
    contribution_features, distance_weights, episode_gradients, policy_input, run_stage, sgd_step, Coupling,
    InputScaling, Mlp, MlpDoc, PolicyNet, RewardModel, StageContext, StageInputs, StageRecord, ValueNet,
    DEFAULT_CLIP, DEFAULT_HIDDEN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Dcpl,
    Nc1,
    NcN,
    NcTr,
    NcPf,
    Rnd,
    CNet,
    KmR,
    KmS,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Dcpl,
        Method::Nc1,
        Method::NcN,
        Method::NcTr,
        Method::NcPf,
        Method::Rnd,
        Method::CNet,
        Method::KmR,
        Method::KmS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dcpl => "DCPL",
            Method::Nc1 => "NC-1",
            Method::NcN => "NC-N",
            Method::NcTr => "NC-TR",
            Method::NcPf => "NC-PF",
            Method::Rnd => "RND",
            Method::CNet => "C-NET",
            Method::KmR => "KM-R",
            Method::KmS => "KM-S",
        }
    }

    /// One cluster per user, actions addressed to users directly.
    pub fn is_per_user(self) -> bool {
        matches!(self, Method::NcN | Method::NcTr | Method::NcPf)
    }

    /// Memberships are updated during training.
    pub fn is_dynamic(self) -> bool {
        self == Method::Dcpl
    }

    pub fn coupling(self) -> Coupling {
        if self == Method::NcN {
            Coupling::Tied
        } else {
            Coupling::Separate
        }
    }

    /// Cluster count actually used for `n_users` users given the configured one.
    pub fn effective_clusters(self, configured: usize, n_users: usize) -> usize {
        match self {
            Method::Nc1 => 1,
            m if m.is_per_user() => n_users,
            _ => configured,
        }
    }

    pub fn policy_input_width(self, c: usize, n_users: usize) -> usize {
        if self == Method::NcPf {
            5 * n_users + clustering::FEATURE_WIDTH * n_users
        } else {
            5 * c
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = DcplError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('_', "-");
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == key)
            .ok_or_else(|| DcplError::invalid(format!("unknown method '{s}'; valid names: {}", Method::valid_names())))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Epochs on which memberships are recomputed: within each segment, every
/// `every` epochs counted from the segment start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    /// Last epoch (1-based, inclusive) of the segment; open-ended when absent.
    pub until: Option<usize>,
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReclusterSchedule {
    pub segments: Vec<ScheduleSegment>,
}

impl Default for ReclusterSchedule {
    fn default() -> Self {
        ReclusterSchedule {
            segments: vec![
                ScheduleSegment { until: Some(10), every: 1 },
                ScheduleSegment { until: Some(30), every: 2 },
                ScheduleSegment { until: None, every: 5 },
            ],
        }
    }
}

impl ReclusterSchedule {
    pub fn never() -> Self {
        ReclusterSchedule { segments: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let mut last_until = 0;
        let mut last_every = 1;
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.every < last_every {
                return Err(DcplError::invalid("recluster intervals must be at least 1 and non-decreasing"));
            }
            match seg.until {
                Some(u) if u <= last_until => {
                    return Err(DcplError::invalid("recluster segments must end at increasing epochs"))
                }
                None if k + 1 != self.segments.len() => {
                    return Err(DcplError::invalid("only the last recluster segment may be open-ended"))
                }
                _ => {}
            }
            last_until = seg.until.unwrap_or(usize::MAX);
            last_every = seg.every;
        }
        Ok(())
    }

    pub fn is_recluster_epoch(&self, epoch: usize) -> bool {
        let mut start = 1;
        for seg in &self.segments {
            let end = seg.until.unwrap_or(usize::MAX);
            if epoch <= end {
                return epoch >= start && (epoch - start) % seg.every.max(1) == 0;
            }
            start = end + 1;
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub eta_theta: f64,
    pub eta_phi: f64,
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eta_e_schedule: ReclusterSchedule,
    pub max_epochs: usize,
    /// `(tweet, retweet)` budget for each training stage.
    pub budgets: Vec<(f64, f64)>,
    pub seed: u64,
    pub method: Method,
    pub n_clusters: usize,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub clip: f64,
    pub input_scaling: InputScaling,
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.7,
            eta_theta: 1e-3,
            eta_phi: 1e-3,
            delta: 1e-4,
            eps1: 0.5,
            eps2: 0.5,
            eta_e_schedule: ReclusterSchedule::default(),
            max_epochs: 100,
            budgets: Vec::new(),
            seed: 0,
            method: Method::Dcpl,
            n_clusters: 8,
            policy_hidden: vec![DEFAULT_HIDDEN, DEFAULT_HIDDEN],
            value_hidden: vec![DEFAULT_HIDDEN],
            clip: DEFAULT_CLIP,
            input_scaling: InputScaling::Log1p,
            checkpoint_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(DcplError::invalid(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.delta > 0.0) {
            return Err(DcplError::invalid("delta must be positive"));
        }
        if !(self.eta_theta > 0.0 && self.eta_phi > 0.0) {
            return Err(DcplError::invalid("learning rates must be positive"));
        }
        if !(self.eps1 >= 0.0 && self.eps2 >= 0.0 && (self.eps1 + self.eps2 - 1.0).abs() <= 1e-12) {
            return Err(DcplError::invalid("eps1 and eps2 must be nonnegative and sum to 1"));
        }
        if self.n_clusters == 0 {
            return Err(DcplError::invalid("cluster count must be at least 1"));
        }
        if self.budgets.iter().any(|(a, b)| !(*a >= 0.0 && *b >= 0.0)) {
            return Err(DcplError::invalid("budgets must be nonnegative"));
        }
        self.eta_e_schedule.validate()
    }
}

/// Returns the configuration for a named method.
pub fn configure_baseline(name: &str, base: &TrainConfig) -> Result<TrainConfig> {
    let method: Method = name.parse()?;
    let mut cfg = base.clone();
    cfg.method = method;
    if method == Method::Nc1 {
        cfg.n_clusters = 1;
    }
    Ok(cfg)
}

/// Budgets `B ~ N·U(0,1)` per stage and activity.
pub fn sample_budgets(n_users: usize, n_stages: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_stages)
        .map(|_| (n_users as f64 * rng.gen::<f64>(), n_users as f64 * rng.gen::<f64>()))
        .collect()
}

/// Inputs to the initial membership of each method.
pub struct ClusterInputs<'a> {
    pub log: &'a EventLog,
    pub net: &'a Network,
    pub part: &'a StagePartition,
}

/// Initial features and memberships for a method: reward-share k-means for
/// DCPL and KM-R, a seeded random partition for RND, network features for
/// C-NET, reward shares joined with the mean stage state for KM-S.
pub fn initial_assignment(method: Method, n_clusters: usize, eps: (f64, f64), seed: u64, inp: &ClusterInputs<'_>) -> Result<(ClusterModel, DMatrix<f64>)> {
    let n = inp.net.n_users();
    let c = method.effective_clusters(n_clusters, n);
    if c > n {
        return Err(DcplError::invalid(format!("cluster count {c} exceeds user count {n}")));
    }
    let feats = clustering::initial_features(inp.log, inp.net, inp.part).x;
    let z = standardize(&feats);
    let labels: Vec<usize> = match method {
        Method::Nc1 => vec![0; n],
        m if m.is_per_user() => (0..n).collect(),
        Method::Dcpl | Method::KmR => clustering::initial_clusters(inp.log, inp.net, inp.part, c, eps.0, eps.1, seed)?.0.labels,
        Method::Rnd => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut labels = vec![0; n];
            for (rank, &i) in order.iter().enumerate() {
                labels[i] = rank % c;
            }
            labels
        }
        Method::CNet => clustering::clusters_from_matrix(&standardize(&network_features(inp.net)), c, eps.0, eps.1, seed)?.labels,
        Method::KmS => {
            let mut mean_state = DMatrix::zeros(n, col::WIDTH);
            for s in 0..inp.part.n_stages {
                let (a, b) = inp.part.stage_window(s);
                mean_state += NetworkState::from_window(inp.log, n, a, b).counts;
            }
            mean_state /= inp.part.n_stages.max(1) as f64;
            let joined = DMatrix::from_fn(n, feats.ncols() + col::WIDTH, |i, f| {
                if f < feats.ncols() {
                    feats[(i, f)]
                } else {
                    mean_state[(i, f - feats.ncols())]
                }
            });
            clustering::clusters_from_matrix(&standardize(&joined), c, eps.0, eps.1, seed)?.labels
        }
        _ => unreachable!("all methods covered"),
    };
    let model = ClusterModel::new(labels.clone(), centroids(&labels, c, &z), eps.0, eps.1)?;
    Ok((model, feats))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub j_theta: f64,
    pub j_phi: f64,
    pub expected_rewards: Vec<f64>,
    pub stage_returns: Vec<f64>,
    pub mean_ari: Option<f64>,
    pub reclustered: bool,
    pub delta_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub theta: MlpDoc,
    pub phi: MlpDoc,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn nets(&self, scaling: InputScaling) -> Result<(PolicyNet, ValueNet)> {
        let policy = PolicyNet::from_mlp(Mlp::from_doc(&self.theta)?)?;
        let value = ValueNet {
            mlp: Mlp::from_doc(&self.phi)?,
            scaling,
        };
        Ok((policy, value))
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub policy: PolicyNet,
    pub value: ValueNet,
    /// Membership of the last stage of the last epoch.
    pub final_labels: Vec<usize>,
    /// Memberships of every stage in the last epoch.
    pub stage_labels: Vec<Vec<usize>>,
    /// Raw features the last stage produced for the next one.
    pub final_features: DMatrix<f64>,
    pub trace: Vec<EpochTrace>,
    pub epochs_run: usize,
    pub converged: bool,
    pub checkpoints: Vec<Checkpoint>,
    /// Largest `|‖a_z‖₁ − B_z| / max(1, B_z)` over every emitted plan.
    pub max_budget_error: f64,
    /// Smallest contribution feature seen.
    pub min_contribution: f64,
}

/// Per-stage machinery shared by training and closed-loop evaluation.
#[derive(Debug, Clone)]
pub struct StageDriver {
    pub method: Method,
    pub n_clusters: usize,
    pub gamma: f64,
    pub delta: f64,
    pub eps: (f64, f64),
    pub scaling: InputScaling,
    pub recluster: bool,
    labels: Vec<usize>,
    features: DMatrix<f64>,
    /// Weighted centroids from the last update; empty clusters keep theirs.
    centroids: Option<DMatrix<f64>>,
    last_summands: Option<[DVector<f64>; 2]>,
}

/// What a stage produced besides its record.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub record: StageRecord,
    pub labels: Vec<usize>,
    pub min_contribution: f64,
}

impl StageDriver {
    pub fn new(method: Method, n_clusters: usize, cfg: &TrainConfig, labels: Vec<usize>, features: DMatrix<f64>, recluster: bool) -> Self {
        StageDriver {
            method,
            n_clusters,
            gamma: cfg.gamma,
            delta: cfg.delta,
            eps: (cfg.eps1, cfg.eps2),
            scaling: cfg.input_scaling,
            recluster,
            labels,
            features,
            centroids: None,
            last_summands: None,
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    /// Replaces the membership used by the next stage.
    pub fn set_labels(&mut self, labels: Vec<usize>) {
        self.labels = labels;
    }

    /// Runs one stage: cluster state, cluster actions, user plan, expected
    /// reward; then the next stage's features and, when reclustering, its
    /// membership.
    pub fn stage(&mut self, policy: &PolicyNet, value: &ValueNet, rm: &RewardModel, ctx: &StageContext, budgets: (f64, f64)) -> Result<StageOutcome> {
        let n = rm.n_users();
        let c = self.n_clusters;
        let z = standardize(&self.features);
        let labels = self.labels.clone();
        let (y, weights) = if self.method.is_per_user() {
            (z.clone(), DVector::from_element(n, 1.0))
        } else {
            let mut y = centroids(&labels, c, &z);
            if let Some(prev) = &self.centroids {
                for m in (0..c).filter(|&m| !labels.contains(&m)) {
                    y.row_mut(m).copy_from(&prev.row(m));
                }
            }
            let w = distance_weights(&z, &labels, &y);
            (y, w)
        };
        let s_c = cluster_state(&labels, c, &ctx.state);
        let extra = (self.method == Method::NcPf).then_some(&z);
        let inputs = StageInputs {
            policy_input: policy_input(&s_c, extra, self.scaling),
            labels: labels.clone(),
            weights,
            budgets,
            coupling: self.method.coupling(),
        };
        let record = run_stage(policy, value, rm, ctx, inputs, self.gamma)?;

        let q = contribution_features(rm, &record.plan, &record.expected);
        let min_q = q.iter().flat_map(|v| v.iter().copied()).fold(f64::INFINITY, f64::min);
        if min_q < -1e-12 {
            return Err(DcplError::invalid(format!("negative contribution feature {min_q} at stage {}", ctx.stage)));
        }
        let p: [DVector<f64>; 2] = std::array::from_fn(|k| {
            clustering::payoff_features(Some(&record.expected.summands[k]), self.last_summands.as_ref().map(|s| &s[k]), n)
        });
        self.last_summands = Some(record.expected.summands.clone());
        self.features = clustering::ClusterFeatures::from_columns(&p[0], &p[1], &q[0], &q[1]).x;

        if self.recluster && !self.method.is_per_user() {
            let prev = ClusterModel::new(labels.clone(), y, self.eps.0, self.eps.1)?;
            let next = update_clusters(&prev, &standardize(&self.features), self.delta)?;
            self.labels = next.labels;
            self.centroids = Some(next.centroids);
        }
        Ok(StageOutcome {
            record,
            labels,
            min_contribution: min_q,
        })
    }
}

fn budget_error(plan: &crate::hawkes::InterventionPlan) -> f64 {
    let st: f64 = plan.tweet.iter().sum();
    let sr: f64 = plan.retweet.iter().sum();
    ((st - plan.budget_tweet).abs() / plan.budget_tweet.max(1.0)).max((sr - plan.budget_retweet).abs() / plan.budget_retweet.max(1.0))
}

fn mean_consecutive_ari(labels: &[Vec<usize>]) -> Option<f64> {
    if labels.len() < 2 {
        return None;
    }
    let scores: Vec<f64> = labels.windows(2).map(|w| ari(&w[0], &w[1]).unwrap_or(f64::NAN)).collect();
    Some(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Seeds of the policy and value initializations.
pub fn network_seeds(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (rng.gen(), rng.gen())
}

/// Builds freshly initialized networks for a method.
pub fn init_networks(cfg: &TrainConfig, n_users: usize) -> (PolicyNet, ValueNet) {
    let c = cfg.method.effective_clusters(cfg.n_clusters, n_users);
    let (ps, vs) = network_seeds(cfg.seed);
    let policy = PolicyNet::new(cfg.method.policy_input_width(c, n_users), c, &cfg.policy_hidden, ps);
    let value = ValueNet::new(n_users, &cfg.value_hidden, cfg.input_scaling, vs);
    (policy, value)
}

fn checkpoint(policy: &PolicyNet, value: &ValueNet, cfg: &TrainConfig, n: usize, epoch: usize) -> Checkpoint {
    Checkpoint {
        theta: policy.mlp.to_doc(),
        phi: value.mlp.to_doc(),
        meta: CheckpointMeta {
            c: policy.n_clusters,
            n,
            seed: cfg.seed,
            epoch,
        },
    }
}

/// Runs the epoch loop over the stage contexts of the training window.
pub fn train(cfg: &TrainConfig, rm: &RewardModel, ctxs: &[StageContext], init: &ClusterModel, init_features: &DMatrix<f64>) -> Result<TrainResult> {
    cfg.validate()?;
    let n = rm.n_users();
    let k_stages = ctxs.len();
    if k_stages < 2 {
        return Err(DcplError::invalid("training needs at least 2 stages"));
    }
    if cfg.budgets.len() != k_stages {
        return Err(DcplError::invalid(format!("expected {k_stages} stage budgets, got {}", cfg.budgets.len())));
    }
    let c = cfg.method.effective_clusters(cfg.n_clusters, n);
    if init.n_clusters() != c || init.n_users() != n {
        return Err(DcplError::invalid(format!(
            "initial clusters have shape {}×{}, expected {n}×{c}",
            init.n_users(),
            init.n_clusters()
        )));
    }
    let (mut policy, mut value) = init_networks(cfg, n);
    let mut trace = Vec::new();
    let mut checkpoints = Vec::new();
    let mut stored: Vec<Vec<usize>> = vec![init.labels.clone(); k_stages];
    let mut final_features = init_features.clone();
    let mut converged = false;
    let mut max_budget_error: f64 = 0.0;
    let mut min_contribution = f64::INFINITY;

    for epoch in 1..=cfg.max_epochs {
        let recluster = cfg.method.is_dynamic() && cfg.eta_e_schedule.is_recluster_epoch(epoch);
        let mut driver = StageDriver::new(cfg.method, c, cfg, init.labels.clone(), init_features.clone(), recluster);
        let mut records = Vec::with_capacity(k_stages);
        let mut used = Vec::with_capacity(k_stages);
        for (k, ctx) in ctxs.iter().enumerate() {
            if !recluster {
                driver.set_labels(stored[k].clone());
            }
            let out = driver
                .stage(&policy, &value, rm, ctx, cfg.budgets[k])
                .map_err(|e| e.context(format!("epoch {epoch}, stage {k}")))?;
            max_budget_error = max_budget_error.max(budget_error(&out.record.plan));
            min_contribution = min_contribution.min(out.min_contribution);
            used.push(out.labels);
            records.push(out.record);
        }
        final_features = driver.features().clone();
        if recluster {
            stored = used.clone();
        }

        let grads = episode_gradients(&policy, &value, rm, ctxs, &records, cfg.gamma)
            .map_err(|e| e.context(format!("epoch {epoch}")))?;
        let before = policy.mlp.params().to_vec();
        sgd_step(policy.mlp.params_mut(), &grads.grad_theta, cfg.eta_theta, cfg.clip);
        sgd_step(value.mlp.params_mut(), &grads.grad_phi, cfg.eta_phi, cfg.clip);
        let delta_theta = before
            .iter()
            .zip(policy.mlp.params())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);

        trace.push(EpochTrace {
            epoch,
            j_theta: grads.j_theta,
            j_phi: grads.j_phi,
            expected_rewards: records.iter().map(|r| r.expected.total()).collect(),
            stage_returns: grads.trace.returns.clone(),
            mean_ari: mean_consecutive_ari(&used),
            reclustered: recluster,
            delta_theta,
        });
        if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 {
            checkpoints.push(checkpoint(&policy, &value, cfg, n, epoch));
        }
        if delta_theta < cfg.delta {
            converged = true;
            break;
        }
    }
    let epochs_run = trace.len();
    if epochs_run > 0 && checkpoints.last().map_or(true, |c| c.meta.epoch != epochs_run) {
        checkpoints.push(checkpoint(&policy, &value, cfg, n, epochs_run));
    }
    Ok(TrainResult {
        policy,
        value,
        final_labels: stored.last().cloned().unwrap_or_default(),
        stage_labels: stored,
        final_features,
        trace,
        epochs_run,
        converged,
        checkpoints,
        max_budget_error,
        min_contribution: if min_contribution.is_finite() { min_contribution } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(m.name().to_lowercase().parse::<Method>().unwrap(), m);
        }
        let err = "bogus".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("KM-R"));
    }

    #[test]
    fn default_schedule() {
        let s = ReclusterSchedule::default();
        s.validate().unwrap();
        let on: Vec<usize> = (1..=45).filter(|&e| s.is_recluster_epoch(e)).collect();
        let mut expect: Vec<usize> = (1..=10).collect();
        expect.extend((11..=30).step_by(2));
        expect.extend((31..=45).step_by(5));
        assert_eq!(on, expect);
        assert!(!ReclusterSchedule::never().is_recluster_epoch(1));
    }

    #[test]
    fn schedule_must_not_shrink() {
        let s = ReclusterSchedule {
            segments: vec![ScheduleSegment { until: Some(5), every: 3 }, ScheduleSegment { until: None, every: 1 }],
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn budgets_are_seeded_and_bounded() {
        let a = sample_budgets(50, 10, 3);
        assert_eq!(a, sample_budgets(50, 10, 3));
        assert!(a.iter().all(|(t, r)| (0.0..50.0).contains(t) && (0.0..50.0).contains(r)));
    }

    #[test]
    fn nc1_has_single_cluster() {
        let cfg = configure_baseline("nc-1", &TrainConfig::default()).unwrap();
        assert_eq!(cfg.method, Method::Nc1);
        assert_eq!(cfg.method.effective_clusters(cfg.n_clusters, 30), 1);
        assert!(configure_baseline("nope", &TrainConfig::default()).is_err());
    }
}
