//! Policy and value approximators, cluster-to-user actions, expected reward
//! and the actor-critic objective with its gradients.

pub mod episode;
pub mod interventions;
pub mod mlp;
pub mod objective;
pub mod reward;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::NetworkState;
use crate::error::{DcplError, Result};
pub use episode::{episode_gradients, episode_objectives, run_stage, EpisodeGradients, StageInputs, StageRecord};
pub use interventions::{distance_weights, normalize_budget, raw_user_actions, user_interventions, Coupling, RawUserActions};
pub use mlp::{Mlp, MlpCache, MlpDoc};
pub use objective::{discounted_returns, sgd_step, total_objective, ObjectiveTrace};
pub use reward::{contribution_features, expected_reward, ExpectedReward, RewardModel, StageContext};

pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_CLIP: f64 = 10.0;

pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Transform applied to raw activity counts before they enter either network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InputScaling {
    Identity,
    #[default]
    Log1p,
}

impl InputScaling {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            InputScaling::Identity => x,
            InputScaling::Log1p => x.max(0.0).ln_1p(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            InputScaling::Identity => 1.0,
            InputScaling::Log1p => 1.0 / (1.0 + x.max(0.0)),
        }
    }
}

/// Cluster-level actions: one tweet incentive per cluster and one retweet
/// incentive per ordered cluster pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterActions {
    pub tweet: DVector<f64>,
    pub retweet: DMatrix<f64>,
}

impl ClusterActions {
    pub fn n_clusters(&self) -> usize {
        self.tweet.len()
    }
}

/// Maps the (flattened) cluster state to nonnegative cluster actions through
/// a softplus head over `C + C²` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    pub mlp: Mlp,
    pub n_clusters: usize,
}

#[derive(Debug, Clone)]
pub struct PolicyCache {
    mlp: MlpCache,
    pre: Vec<f64>,
}

impl PolicyNet {
    pub fn new(input: usize, n_clusters: usize, hidden: &[usize], seed: u64) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(n_clusters + n_clusters * n_clusters);
        PolicyNet {
            mlp: Mlp::new(&sizes, seed),
            n_clusters,
        }
    }

    pub fn from_mlp(mlp: Mlp) -> Result<Self> {
        let out = mlp.output_size();
        let c = ((((4 * out + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
        if c + c * c != out || c == 0 {
            return Err(DcplError::invalid(format!("policy output width {out} is not C + C²")));
        }
        Ok(PolicyNet { mlp, n_clusters: c })
    }

    pub fn forward(&self, input: &[f64]) -> ClusterActions {
        self.forward_cached(input).0
    }

    pub fn forward_cached(&self, input: &[f64]) -> (ClusterActions, PolicyCache) {
        let (pre, cache) = self.mlp.forward_cached(input);
        let c = self.n_clusters;
        let tweet = DVector::from_fn(c, |m, _| softplus(pre[m]));
        let retweet = DMatrix::from_fn(c, c, |m, k| softplus(pre[c + m * c + k]));
        (ClusterActions { tweet, retweet }, PolicyCache { mlp: cache, pre })
    }

    /// Parameter gradient given gradients with respect to the actions.
    pub fn backward(&self, cache: &PolicyCache, g_tweet: &DVector<f64>, g_retweet: &DMatrix<f64>) -> Vec<f64> {
        let c = self.n_clusters;
        let mut g = vec![0.0; c + c * c];
        for m in 0..c {
            g[m] = g_tweet[m] * sigmoid(cache.pre[m]);
            for k in 0..c {
                g[c + m * c + k] = g_retweet[(m, k)] * sigmoid(cache.pre[c + m * c + k]);
            }
        }
        self.mlp.backward(&cache.mlp, &g).0
    }
}

/// Flattens a `C×5` cluster state row by row after scaling, optionally
/// followed by extra (unscaled) features.
pub fn policy_input(cluster_state: &DMatrix<f64>, extra: Option<&DMatrix<f64>>, scaling: InputScaling) -> Vec<f64> {
    let mut v = Vec::with_capacity(cluster_state.len() + extra.map_or(0, |e| e.len()));
    for m in 0..cluster_state.nrows() {
        for f in 0..cluster_state.ncols() {
            v.push(scaling.apply(cluster_state[(m, f)]));
        }
    }
    if let Some(e) = extra {
        for m in 0..e.nrows() {
            for f in 0..e.ncols() {
                v.push(e[(m, f)]);
            }
        }
    }
    v
}

/// State-value approximator over the flattened `5N` user state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub mlp: Mlp,
    pub scaling: InputScaling,
}

impl ValueNet {
    pub fn new(n_users: usize, hidden: &[usize], scaling: InputScaling, seed: u64) -> Self {
        let mut sizes = vec![5 * n_users];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        ValueNet {
            mlp: Mlp::new(&sizes, seed),
            scaling,
        }
    }

    fn input(&self, state: &NetworkState) -> Vec<f64> {
        state.flatten().iter().map(|&x| self.scaling.apply(x)).collect()
    }

    pub fn value(&self, state: &NetworkState) -> f64 {
        self.mlp.forward(&self.input(state))[0]
    }

    pub fn value_cached(&self, state: &NetworkState) -> (f64, MlpCache) {
        let (out, cache) = self.mlp.forward_cached(&self.input(state));
        (out[0], cache)
    }

    /// Gradients of `seed·V(state)` with respect to the parameters and the
    /// raw `N×5` state.
    pub fn backward(&self, cache: &MlpCache, state: &NetworkState, seed: f64) -> (Vec<f64>, DMatrix<f64>) {
        let (gp, gx) = self.mlp.backward(cache, &[seed]);
        let n = state.n_users();
        let g_state = DMatrix::from_fn(n, 5, |i, f| gx[i * 5 + f] * self.scaling.derivative(state.counts[(i, f)]));
        (gp, g_state)
    }
}
