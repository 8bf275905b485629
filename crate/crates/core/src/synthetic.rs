//! Seeded synthetic networks and activity logs with the same schema as real
//! data, for tests, examples and the bundled fixture.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{EventLog, Network, StagePartition};
use crate::error::Result;
use crate::hawkes::{simulate, HawkesModel, Kernel, Process, ProcessParams, SimulationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_users: usize,
    /// Edge probability scale within a block.
    pub p_in: f64,
    /// Edge probability scale across blocks.
    pub p_out: f64,
    /// Spread of the per-user activity propensity.
    pub heterogeneity: f64,
    /// Base rate scale in events per hour.
    pub base_rate: f64,
    pub tweet_radius: f64,
    pub retweet_radius: f64,
    pub like_radius: f64,
    pub omega: f64,
    pub horizon: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_users: 20,
            p_in: 0.35,
            p_out: 0.05,
            heterogeneity: 1.0,
            base_rate: 0.15,
            tweet_radius: 0.4,
            retweet_radius: 0.3,
            like_radius: 0.3,
            omega: 1.0,
            horizon: 40.0,
            seed: 7,
        }
    }
}

impl SyntheticConfig {
    pub fn block(&self, i: usize) -> usize {
        usize::from(i >= self.n_users / 2)
    }
}

/// Degree-corrected two-block follower graph: user weights are log-normal
/// and `P(G_ij = 1) = min(1, p·w_i·w_j)` with `p` set by block membership.
pub fn two_block_network(cfg: &SyntheticConfig, rng: &mut impl Rng) -> Result<(Network, DVector<f64>)> {
    let n = cfg.n_users;
    let w = propensities(n, cfg.heterogeneity, rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = if cfg.block(i) == cfg.block(j) { cfg.p_in } else { cfg.p_out };
            if rng.gen::<f64>() < (p * w[i] * w[j]).min(1.0) {
                edges.push((i, j));
            }
        }
    }
    Ok((Network::from_edges(n, edges)?, w))
}

fn propensities(n: usize, sigma: f64, rng: &mut impl Rng) -> DVector<f64> {
    let raw = DVector::from_fn(n, |_, _| {
        let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
        (sigma * z).exp()
    });
    let mean = raw.mean();
    raw / mean
}

fn scaled(mut k: Kernel, radius: f64) -> Kernel {
    let r = k.spectral_radius();
    if r > 0.0 {
        k.scale(radius / r);
    }
    k
}

/// Ground-truth processes on `net`: block 0 leans towards true news and
/// block 1 towards fake news; tweet and like kernels live on the follower
/// edges, the retweet kernel is rank two. Users without followers never
/// receive likes.
pub fn ground_truth(cfg: &SyntheticConfig, net: &Network, w: &DVector<f64>, rng: &mut impl Rng) -> Result<HawkesModel> {
    let n = cfg.n_users;
    let lean = |i: usize, favoured: usize| if cfg.block(i) == favoured { 1.5 } else { 0.5 };
    let jitter = |rng: &mut dyn rand::RngCore| 0.5 + rng.gen::<f64>();
    let mut mu: [DVector<f64>; 5] = std::array::from_fn(|_| DVector::zeros(n));
    for i in 0..n {
        let a = cfg.base_rate * w[i].sqrt();
        mu[Process::FakeTweet.index()][i] = a * lean(i, 1) * jitter(rng);
        mu[Process::TrueTweet.index()][i] = a * lean(i, 0) * jitter(rng);
        mu[Process::FakeRetweet.index()][i] = 0.5 * a * lean(i, 1) * jitter(rng);
        mu[Process::TrueRetweet.index()][i] = 0.5 * a * lean(i, 0) * jitter(rng);
        mu[Process::Like.index()][i] = a * jitter(rng);
    }
    let on_edges = |rng: &mut dyn rand::RngCore| {
        let mut m = DMatrix::zeros(n, n);
        for (j, i) in net.edges() {
            m[(j, i)] = 0.5 + rng.gen::<f64>();
        }
        Kernel::Dense(m)
    };
    let tweet = scaled(on_edges(rng), cfg.tweet_radius);
    let mut like = on_edges(rng);
    if let Kernel::Dense(m) = &mut like {
        for i in (0..n).filter(|&i| net.followers(i).is_empty()) {
            m.column_mut(i).fill(0.0);
            mu[Process::Like.index()][i] = 0.0;
        }
    }
    let like = scaled(like, cfg.like_radius);
    let u = DMatrix::from_fn(n, 2, |i, r| if cfg.block(i) == r { w[i] * jitter(rng) } else { 0.1 * jitter(rng) });
    let v = DMatrix::from_fn(n, 2, |i, r| if cfg.block(i) == r { jitter(rng) } else { 0.1 * jitter(rng) });
    let retweet = scaled(Kernel::LowRank { u, v }, cfg.retweet_radius);

    let params = Process::ALL.map(|p| {
        let kernel = match p {
            Process::FakeTweet | Process::TrueTweet => tweet.clone(),
            Process::FakeRetweet | Process::TrueRetweet => retweet.clone(),
            Process::Like => like.clone(),
        };
        ProcessParams {
            mu: mu[p.index()].clone(),
            omega: cfg.omega,
            kernel,
        }
    });
    HawkesModel::new(params)
}

pub struct SyntheticData {
    pub net: Network,
    pub model: HawkesModel,
    pub log: EventLog,
}

/// Network, ground-truth model and a log over `[0, horizon)`.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (net, w) = two_block_network(cfg, &mut rng)?;
    let model = ground_truth(cfg, &net, &w, &mut rng)?;
    let part = StagePartition::new(0.0, cfg.horizon, cfg.horizon)?;
    let log = simulate(&model, &net, part, &EventLog::default(), &[], rng.gen(), SimulationConfig::default())?;
    Ok(SyntheticData { net, model, log })
}
