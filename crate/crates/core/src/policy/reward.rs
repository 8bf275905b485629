use nalgebra::{DMatrix, DVector};

use crate::data::{col, compute_state, EventLog, Network, NetworkState, StagePartition};
use crate::error::{DcplError, Result};
use crate::hawkes::{residual_excitation, HawkesModel, InterventionPlan, MeanPropagator, Process};

/// Per-run quantities shared by every stage: the stage propagators and the
/// network used for exposure.
#[derive(Debug, Clone)]
pub struct RewardModel {
    net: Network,
    propagators: Vec<MeanPropagator>,
    mu: Vec<DVector<f64>>,
    phi_retweet: DMatrix<f64>,
    dt: f64,
}

/// Expected counts of every process over one stage when no intervention is
/// applied, plus the observed state at the stage start.
#[derive(Debug, Clone)]
pub struct StageContext {
    pub stage: usize,
    pub state: NetworkState,
    pub base: [DVector<f64>; 5],
}

/// Expected reward of one stage and its per-user decomposition, indexed by
/// activity (0 = tweet, 1 = retweet).
#[derive(Debug, Clone)]
pub struct ExpectedReward {
    pub reward: [f64; 2],
    pub true_counts: [DVector<f64>; 2],
    /// `GᵀG E[n(F)]`.
    pub fake_gram: [DVector<f64>; 2],
    pub summands: [DVector<f64>; 2],
    pub next_state: NetworkState,
}

impl ExpectedReward {
    pub fn total(&self) -> f64 {
        self.reward[0] + self.reward[1]
    }
}

pub(crate) const TRUE_PROCESSES: [Process; 2] = [Process::TrueTweet, Process::TrueRetweet];
pub(crate) const FAKE_PROCESSES: [Process; 2] = [Process::FakeTweet, Process::FakeRetweet];
pub(crate) const TRUE_COLUMNS: [usize; 2] = [col::TRUE_TWEET, col::TRUE_RETWEET];

impl RewardModel {
    pub fn new(model: &HawkesModel, net: &Network, dt: f64) -> Result<Self> {
        if model.n_users() != net.n_users() {
            return Err(DcplError::Dimension {
                expected: model.n_users(),
                got: net.n_users(),
            });
        }
        let propagators = Process::ALL
            .iter()
            .map(|&p| {
                MeanPropagator::new(model.params(p), dt).map_err(|e| e.context(format!("process {}", p.name())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RewardModel {
            net: net.clone(),
            propagators,
            mu: Process::ALL.iter().map(|&p| model.params(p).mu.clone()).collect(),
            phi_retweet: model.params(Process::TrueRetweet).kernel.dense(),
            dt,
        })
    }

    pub fn n_users(&self) -> usize {
        self.net.n_users()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Dense retweet kernel `Φ[j][i]`.
    pub fn phi_retweet(&self) -> &DMatrix<f64> {
        &self.phi_retweet
    }

    /// `∂E[n_z(T)]/∂a_z` for activity `z`.
    pub fn jacobian(&self, z: usize) -> &DMatrix<f64> {
        self.propagators[TRUE_PROCESSES[z].index()].rate_jacobian()
    }

    /// Context at the start of `stage` given every event observed so far.
    pub fn stage_context(&self, model: &HawkesModel, history: &EventLog, part: &StagePartition, stage: usize) -> Result<StageContext> {
        let n = self.n_users();
        let state = compute_state(history, part, n, stage)?;
        let tau = part.boundary(stage);
        let past = history.before(tau);
        let mut base: [DVector<f64>; 5] = std::array::from_fn(|_| DVector::zeros(n));
        for p in Process::ALL {
            let exc = residual_excitation(model, p, past, tau)?;
            base[p.index()] = self.propagators[p.index()].expected_counts(&exc.values, &self.mu[p.index()]);
        }
        Ok(StageContext { stage, state, base })
    }

    /// Contexts for every stage of the partition.
    pub fn contexts(&self, model: &HawkesModel, history: &EventLog, part: &StagePartition) -> Result<Vec<StageContext>> {
        (0..part.n_stages).map(|s| self.stage_context(model, history, part, s)).collect()
    }
}

/// `R_z = (1/N)·E[n(T,z)]ᵀ GᵀG E[n(F,z)]` with the plan applied to the true
/// processes only; the expected next state stacks the expected counts.
pub fn expected_reward(rm: &RewardModel, ctx: &StageContext, plan: &InterventionPlan) -> ExpectedReward {
    let n = rm.n_users();
    let nf = n as f64;
    let mut next = NetworkState::zeros(n);
    let mut reward = [0.0; 2];
    let mut true_counts: [DVector<f64>; 2] = std::array::from_fn(|_| DVector::zeros(n));
    let mut fake_gram = true_counts.clone();
    let mut summands = true_counts.clone();
    for z in 0..2 {
        let a = DVector::from_column_slice(plan.for_process(TRUE_PROCESSES[z]).expect("intervened"));
        let et = &ctx.base[TRUE_PROCESSES[z].index()] + rm.jacobian(z) * a;
        let ef = &ctx.base[FAKE_PROCESSES[z].index()];
        let v = rm.net.gram_apply(ef);
        summands[z] = et.component_mul(&v) / nf;
        reward[z] = summands[z].sum();
        next.counts.set_column(TRUE_COLUMNS[z], &et);
        next.counts.set_column(TRUE_COLUMNS[z] + 1, ef);
        true_counts[z] = et;
        fake_gram[z] = v;
    }
    next.counts.set_column(col::LIKES, &ctx.base[Process::Like.index()]);
    ExpectedReward {
        reward,
        true_counts,
        fake_gram,
        summands,
        next_state: next,
    }
}

/// Drop in each user's reward summand when only their own incentive is
/// removed: `q_i = (1/N)·Q_ii·a_i·(GᵀG E[n(F)])_i`.
pub fn contribution_features(rm: &RewardModel, plan: &InterventionPlan, er: &ExpectedReward) -> [DVector<f64>; 2] {
    let n = rm.n_users();
    std::array::from_fn(|z| {
        let a = plan.for_process(TRUE_PROCESSES[z]).expect("intervened");
        let q = rm.jacobian(z);
        DVector::from_fn(n, |i, _| q[(i, i)] * a[i] * er.fake_gram[z][i] / n as f64)
    })
}
