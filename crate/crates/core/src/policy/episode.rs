//! One pass over the stages of a training window and the exact gradients of
//! both objectives. Memberships, distance weights and budgets are inputs to
//! each stage and are held fixed when differentiating.

use nalgebra::{DMatrix, DVector};

use super::interventions::{normalize_budget_backward, raw_user_actions_backward};
use super::objective::{total_objective, ObjectiveTrace};
use super::reward::{expected_reward, ExpectedReward, RewardModel, StageContext, TRUE_COLUMNS};
use super::{normalize_budget, raw_user_actions, ClusterActions, Coupling, PolicyCache, PolicyNet, RawUserActions, ValueNet};
use crate::error::Result;
use crate::hawkes::InterventionPlan;
use crate::policy::mlp::MlpCache;

#[derive(Debug, Clone)]
pub struct StageInputs {
    pub policy_input: Vec<f64>,
    pub labels: Vec<usize>,
    pub weights: DVector<f64>,
    pub budgets: (f64, f64),
    pub coupling: Coupling,
}

#[derive(Debug, Clone)]
pub struct StageRecord {
    pub stage: usize,
    pub inputs: StageInputs,
    pub actions: ClusterActions,
    pub plan: InterventionPlan,
    pub expected: ExpectedReward,
    /// `V(s_k)` on the observed state.
    pub value: f64,
    /// `V(s_k')` on the expected next state.
    pub value_next: f64,
    /// `r_k = E[R_k] + γ·V(s_k')`.
    pub r: f64,
    policy_cache: PolicyCache,
    raw: RawUserActions,
    value_cache: MlpCache,
    next_cache: MlpCache,
}

/// Cluster actions, user plan, expected reward and value terms for one stage.
pub fn run_stage(
    policy: &PolicyNet,
    value: &ValueNet,
    rm: &RewardModel,
    ctx: &StageContext,
    inputs: StageInputs,
    gamma: f64,
) -> Result<StageRecord> {
    let (actions, policy_cache) = policy.forward_cached(&inputs.policy_input);
    let raw = raw_user_actions(&actions, &inputs.labels, &inputs.weights, rm.phi_retweet(), inputs.coupling);
    let plan = InterventionPlan {
        stage: ctx.stage,
        tweet: normalize_budget(&raw.tweet, inputs.budgets.0)?.as_slice().to_vec(),
        retweet: normalize_budget(&raw.retweet, inputs.budgets.1)?.as_slice().to_vec(),
        budget_tweet: inputs.budgets.0,
        budget_retweet: inputs.budgets.1,
    };
    let expected = expected_reward(rm, ctx, &plan);
    let (v_state, value_cache) = value.value_cached(&ctx.state);
    let (v_next, next_cache) = value.value_cached(&expected.next_state);
    let r = expected.total() + gamma * v_next;
    Ok(StageRecord {
        stage: ctx.stage,
        inputs,
        actions,
        plan,
        expected,
        value: v_state,
        value_next: v_next,
        r,
        policy_cache,
        raw,
        value_cache,
        next_cache,
    })
}

#[derive(Debug, Clone)]
pub struct EpisodeGradients {
    pub j_theta: f64,
    pub j_phi: f64,
    pub grad_theta: Vec<f64>,
    pub grad_phi: Vec<f64>,
    pub trace: ObjectiveTrace,
}

/// `∇_θ J_θ` through softplus, cluster-to-user actions, budget scaling and
/// the expected reward and next-state value; `∇_φ J_φ` including the value
/// terms inside the returns.
pub fn episode_gradients(
    policy: &PolicyNet,
    value: &ValueNet,
    rm: &RewardModel,
    ctxs: &[StageContext],
    records: &[StageRecord],
    gamma: f64,
) -> Result<EpisodeGradients> {
    let rewards: Vec<f64> = records.iter().map(|r| r.r).collect();
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let (j_theta, j_phi, trace) = total_objective(&rewards, &values, gamma)?;
    let n = rm.n_users() as f64;

    let mut grad_theta = vec![0.0; policy.mlp.params().len()];
    let mut grad_phi = vec![0.0; value.mlp.params().len()];
    let mut weight = 0.0;
    let mut sign_acc = 0.0;
    for (k, (rec, ctx)) in records.iter().zip(ctxs).enumerate() {
        // ∂J_θ/∂r_j = Σ_{k≤j} γ^{j-k}
        weight = 1.0 + gamma * weight;
        let (_, g_next) = value.backward(&rec.next_cache, &rec.expected.next_state, gamma * weight);
        let mut g_raw: [DVector<f64>; 2] = std::array::from_fn(|_| DVector::zeros(0));
        for z in 0..2 {
            let g_counts = &rec.expected.fake_gram[z] * (weight / n) + g_next.column(TRUE_COLUMNS[z]);
            let g_plan = rm.jacobian(z).tr_mul(&g_counts);
            let raw = if z == 0 { &rec.raw.tweet } else { &rec.raw.retweet };
            let budget = if z == 0 { rec.inputs.budgets.0 } else { rec.inputs.budgets.1 };
            g_raw[z] = normalize_budget_backward(raw, budget, &g_plan);
        }
        let (g_ct, g_cr): (DVector<f64>, DMatrix<f64>) = raw_user_actions_backward(
            &rec.actions,
            &rec.inputs.labels,
            &rec.inputs.weights,
            &rec.raw,
            &g_raw[0],
            &g_raw[1],
            rec.inputs.coupling,
        );
        for (acc, g) in grad_theta.iter_mut().zip(policy.backward(&rec.policy_cache, &g_ct, &g_cr)) {
            *acc += g;
        }

        let sign = signum(trace.values[k] - trace.returns[k]);
        let (g_state, _) = value.backward(&rec.value_cache, &ctx.state, -sign);
        sign_acc = sign + gamma * sign_acc;
        let (g_next_phi, _) = value.backward(&rec.next_cache, &rec.expected.next_state, gamma * sign_acc);
        for ((acc, a), b) in grad_phi.iter_mut().zip(g_state).zip(g_next_phi) {
            *acc += a + b;
        }
    }
    Ok(EpisodeGradients {
        j_theta,
        j_phi,
        grad_theta,
        grad_phi,
        trace,
    })
}

fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Both objectives for fixed stage inputs.
pub fn episode_objectives(
    policy: &PolicyNet,
    value: &ValueNet,
    rm: &RewardModel,
    ctxs: &[StageContext],
    inputs: &[StageInputs],
    gamma: f64,
) -> Result<(f64, f64)> {
    let mut rewards = Vec::with_capacity(ctxs.len());
    let mut values = Vec::with_capacity(ctxs.len());
    for (ctx, inp) in ctxs.iter().zip(inputs) {
        let rec = run_stage(policy, value, rm, ctx, inp.clone(), gamma)?;
        rewards.push(rec.r);
        values.push(rec.value);
    }
    let (jt, jp, _) = total_objective(&rewards, &values, gamma)?;
    Ok((jt, jp))
}
