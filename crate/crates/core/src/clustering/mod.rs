//! Grouping users: features, k-means, dynamic weighted-centroid updates and
//! partition metrics.

pub mod kmeans;
pub mod metrics;
pub mod network;

use nalgebra::{DMatrix, DVector};

use crate::data::{col, EventLog, Network, NetworkState, StagePartition};
use crate::error::{DcplError, Result};

pub use kmeans::{kmeans, select_num_clusters, KMeansResult, ScoreRow, Selection};
pub use metrics::{ari, nmi};
pub use network::network_features;

pub const FEATURE_WIDTH: usize = 4;
pub const UPDATE_MAX_ITERATIONS: usize = 300;

/// Per-user clustering features `(p_tweet, p_retweet, q_tweet, q_retweet)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFeatures {
    pub x: DMatrix<f64>,
}

impl ClusterFeatures {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.ncols() != FEATURE_WIDTH {
            return Err(DcplError::Dimension {
                expected: FEATURE_WIDTH,
                got: x.ncols(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DcplError::invalid("clustering features must be finite"));
        }
        Ok(ClusterFeatures { x })
    }

    pub fn from_columns(p_tweet: &DVector<f64>, p_retweet: &DVector<f64>, q_tweet: &DVector<f64>, q_retweet: &DVector<f64>) -> Self {
        let n = p_tweet.len();
        let cols = [p_tweet, p_retweet, q_tweet, q_retweet];
        ClusterFeatures {
            x: DMatrix::from_fn(n, FEATURE_WIDTH, |i, f| cols[f][i]),
        }
    }

    pub fn n_users(&self) -> usize {
        self.x.nrows()
    }

    pub fn standardized(&self) -> DMatrix<f64> {
        standardize(&self.x)
    }
}

/// Membership and centroids of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub labels: Vec<usize>,
    pub centroids: DMatrix<f64>,
    pub eps1: f64,
    pub eps2: f64,
}

impl ClusterModel {
    pub fn new(labels: Vec<usize>, centroids: DMatrix<f64>, eps1: f64, eps2: f64) -> Result<Self> {
        let c = centroids.nrows();
        if c == 0 {
            return Err(DcplError::invalid("a cluster model needs at least one cluster"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(DcplError::invalid(format!("membership {bad} outside 0..{c}")));
        }
        check_mixing(eps1, eps2)?;
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(DcplError::invalid("centroids must be finite"));
        }
        Ok(ClusterModel {
            labels,
            centroids,
            eps1,
            eps2,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.labels.len()
    }

    /// One-hot `N×C` membership matrix.
    pub fn membership_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.labels.len(), self.n_clusters());
        for (i, &l) in self.labels.iter().enumerate() {
            m[(i, l)] = 1.0;
        }
        m
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_clusters()];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

fn check_mixing(eps1: f64, eps2: f64) -> Result<()> {
    if !(eps1 >= 0.0 && eps2 >= 0.0 && ((eps1 + eps2) - 1.0).abs() <= 1e-12) {
        return Err(DcplError::invalid(format!(
            "centroid mixing weights must be nonnegative and sum to 1, got {eps1} and {eps2}"
        )));
    }
    Ok(())
}

/// Per-column z-score over rows; constant columns become zero.
pub fn standardize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = x.clone();
    if n == 0 {
        return out;
    }
    for f in 0..x.ncols() {
        let column = x.column(f);
        let mean = column.mean();
        let var = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for i in 0..n {
            out[(i, f)] = if sd > 1e-12 * mean.abs().max(1.0) {
                (x[(i, f)] - mean) / sd
            } else {
                0.0
            };
        }
    }
    out
}

/// Nearest centroid per row, ties to the lower index.
pub(crate) fn assign(x: &DMatrix<f64>, centroids: &DMatrix<f64>) -> Vec<usize> {
    (0..x.nrows())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for m in 0..centroids.nrows() {
                let d = kmeans::sq_dist(x, i, centroids, m);
                if d < best.1 {
                    best = (m, d);
                }
            }
            best.0
        })
        .collect()
}

fn member_sums(x: &DMatrix<f64>, labels: &[usize], c: usize) -> (DMatrix<f64>, Vec<usize>) {
    let mut sums = DMatrix::zeros(c, x.ncols());
    let mut counts = vec![0usize; c];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for f in 0..x.ncols() {
            sums[(l, f)] += x[(i, f)];
        }
    }
    (sums, counts)
}

/// Member means; clusters without members keep the corresponding row of `keep`.
pub(crate) fn means_or_keep(x: &DMatrix<f64>, labels: &[usize], keep: &DMatrix<f64>) -> DMatrix<f64> {
    let (mut sums, counts) = member_sums(x, labels, keep.nrows());
    for (m, &cnt) in counts.iter().enumerate() {
        for f in 0..x.ncols() {
            sums[(m, f)] = if cnt > 0 { sums[(m, f)] / cnt as f64 } else { keep[(m, f)] };
        }
    }
    sums
}

/// Member means of the rows of `values`; empty clusters give a zero row.
pub fn cluster_means(labels: &[usize], c: usize, values: &DMatrix<f64>) -> DMatrix<f64> {
    let (mut sums, counts) = member_sums(values, labels, c);
    for (m, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            for f in 0..values.ncols() {
                sums[(m, f)] /= cnt as f64;
            }
        }
    }
    sums
}

/// `C×5` mean member state.
pub fn cluster_state(labels: &[usize], c: usize, state: &NetworkState) -> DMatrix<f64> {
    cluster_means(labels, c, &state.counts)
}

/// Centroids of the features under the membership.
pub fn centroids(labels: &[usize], c: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
    cluster_means(labels, c, x)
}

/// Reassigns users given next-stage features, pulling each centroid towards
/// the previous stage's centroid: `Ÿ = ε₁·Ẏ + ε₂·Y_prev` where `Ẏ` are the
/// raw member means. Iterates until memberships repeat or the weighted
/// centroids move less than `delta`.
pub fn update_clusters(prev: &ClusterModel, x_next: &DMatrix<f64>, delta: f64) -> Result<ClusterModel> {
    if x_next.nrows() != prev.n_users() {
        return Err(DcplError::Dimension {
            expected: prev.n_users(),
            got: x_next.nrows(),
        });
    }
    if x_next.ncols() != prev.centroids.ncols() {
        return Err(DcplError::Dimension {
            expected: prev.centroids.ncols(),
            got: x_next.ncols(),
        });
    }
    let (eps1, eps2) = (prev.eps1, prev.eps2);
    let anchor = &prev.centroids;
    let mut weighted = anchor.clone();
    let mut labels = prev.labels.clone();
    for _ in 0..UPDATE_MAX_ITERATIONS {
        let raw = means_or_keep(x_next, &labels, &weighted);
        let (_, counts) = member_sums(x_next, &labels, anchor.nrows());
        let mut next = raw * eps1 + anchor * eps2;
        for (m, &cnt) in counts.iter().enumerate() {
            if cnt == 0 {
                next.row_mut(m).copy_from(&weighted.row(m));
            }
        }
        let moved = (&next - &weighted).norm();
        weighted = next;
        let new_labels = assign(x_next, &weighted);
        let same = new_labels == labels;
        labels = new_labels;
        if same || moved < delta {
            break;
        }
    }
    ClusterModel::new(labels, weighted, eps1, eps2)
}

/// Per-user empirical reward share `(1/N)·n_i(T,z)·(GᵀG n(F,z))_i` summed over
/// the stages of `part`, for tweets and retweets.
pub fn empirical_reward_shares(log: &EventLog, net: &Network, part: &StagePartition) -> (DVector<f64>, DVector<f64>) {
    let n = net.n_users();
    let mut tweet = DVector::zeros(n);
    let mut retweet = DVector::zeros(n);
    for s in 0..part.n_stages {
        let (a, b) = part.stage_window(s);
        let st = NetworkState::from_window(log, n, a, b);
        for (out, t_col, f_col) in [
            (&mut tweet, col::TRUE_TWEET, col::FAKE_TWEET),
            (&mut retweet, col::TRUE_RETWEET, col::FAKE_RETWEET),
        ] {
            let v = net.gram_apply(&st.column(f_col));
            let t = st.column(t_col);
            for i in 0..n {
                out[i] += t[i] * v[i] / n as f64;
            }
        }
    }
    (tweet, retweet)
}

/// Initial features: the empirical reward share fills both the payoff and
/// the contribution columns.
pub fn initial_features(log: &EventLog, net: &Network, part: &StagePartition) -> ClusterFeatures {
    let (t, r) = empirical_reward_shares(log, net, part);
    ClusterFeatures::from_columns(&t, &r, &t, &r)
}

/// k-means++ on standardized initial features.
pub fn initial_clusters(
    log: &EventLog,
    net: &Network,
    part: &StagePartition,
    c: usize,
    eps1: f64,
    eps2: f64,
    seed: u64,
) -> Result<(ClusterModel, ClusterFeatures)> {
    let n = net.n_users();
    if c == 0 || c > n {
        return Err(DcplError::invalid(format!("cluster count {c} outside 1..={n}")));
    }
    if part.n_stages < 3 {
        return Err(DcplError::invalid("initial clusters need at least 3 stages of training data"));
    }
    let feats = initial_features(log, net, part);
    let model = clusters_from_matrix(&feats.standardized(), c, eps1, eps2, seed)?;
    Ok((model, feats))
}

/// k-means++ on an arbitrary (already scaled) feature matrix.
pub fn clusters_from_matrix(x: &DMatrix<f64>, c: usize, eps1: f64, eps2: f64, seed: u64) -> Result<ClusterModel> {
    let r = kmeans(x, c, seed)?;
    ClusterModel::new(r.labels, r.centroids, eps1, eps2)
}

/// Payoff: change in the user's expected-reward share between the two most
/// recent stages; zero when fewer than two stages exist.
pub fn payoff_features(last: Option<&DVector<f64>>, before_last: Option<&DVector<f64>>, n: usize) -> DVector<f64> {
    match (last, before_last) {
        (Some(a), Some(b)) => a - b,
        _ => DVector::zeros(n),
    }
}

/// Number of distinct clusters each user visited over a sequence of
/// memberships, and the number of times each user switched cluster.
pub fn transition_counts(history: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let n = history.first().map_or(0, |h| h.len());
    let mut unique = vec![0; n];
    let mut switches = vec![0; n];
    for i in 0..n {
        let mut seen: Vec<usize> = history.iter().map(|h| h[i]).collect();
        switches[i] = seen.windows(2).filter(|w| w[0] != w[1]).count();
        seen.sort_unstable();
        seen.dedup();
        unique[i] = seen.len();
    }
    (unique, switches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn model(labels: Vec<usize>, centroids: DMatrix<f64>, eps2: f64) -> ClusterModel {
        ClusterModel::new(labels, centroids, 1.0 - eps2, eps2).unwrap()
    }

    #[test]
    fn cluster_state_shapes() {
        let mut st = NetworkState::zeros(3);
        st.counts[(0, 0)] = 2.0;
        st.counts[(1, 1)] = 2.0;
        st.counts[(2, 4)] = 7.0;
        let s = cluster_state(&[0, 0, 1], 3, &st);
        assert_eq!(s.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 0.0, 7.0]);
        assert!(s.row(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn centroids_shapes() {
        let x = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0, 0.0, 9.0, 9.0, 9.0, 9.0]);
        let y = centroids(&[1, 1, 0], 3, &x);
        assert_eq!(y.row(0).iter().copied().collect::<Vec<_>>(), vec![9.0; 4]);
        assert_eq!(y.row(1).iter().copied().collect::<Vec<_>>(), vec![2.0, 2.0, 2.0, 2.0]);
        assert!(y.row(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn standardize_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let z = standardize(&x);
        assert!(z.column(0).mean().abs() < 1e-15);
        let var = z.column(0).iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-12);
        assert!(z.column(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn frozen_centroids_are_idempotent() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(15, 4, |_, _| rng.gen::<f64>());
        let y = DMatrix::from_fn(3, 4, |_, _| rng.gen::<f64>());
        let start = model(vec![0; 15], y.clone(), 1.0);
        let once = update_clusters(&start, &x, 1e-8).unwrap();
        assert_eq!(once.centroids, y);
        let twice = update_clusters(&once, &x, 1e-8).unwrap();
        assert_eq!(once.labels, twice.labels);
        assert_eq!(once.labels, assign(&x, &y));
    }

    #[test]
    fn zero_anchor_weight_is_lloyd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = DMatrix::from_fn(30, 4, |i, _| (i % 3) as f64 * 4.0 + rng.gen::<f64>());
        let init = kmeans::kmeans_pp_init(&x, 3, &mut rng);
        let labels = assign(&x, &init);
        let start = model(labels, init.clone(), 0.0);
        let upd = update_clusters(&start, &x, 1e-10).unwrap();
        let lloyd = kmeans::lloyd(&x, init);
        assert_eq!(upd.labels, lloyd.labels);
        assert!((upd.centroids - lloyd.centroids).norm() < 1e-9);
    }

    /// Exhaustive oracle: the result must be a fixed point of the update map
    /// among all 2¹⁰ assignments of 10 points to 2 clusters.
    #[test]
    fn converged_memberships_are_fixed_points() {
        for seed in 0..10 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(10, 4, |_, _| rng.gen::<f64>() * 3.0);
            let anchor = DMatrix::from_fn(2, 4, |_, _| rng.gen::<f64>() * 3.0);
            let labels: Vec<usize> = (0..10).map(|_| rng.gen_range(0..2)).collect();
            let start = model(labels, anchor.clone(), 0.5);
            let got = update_clusters(&start, &x, 1e-12).unwrap();

            let mut fixed_points = Vec::new();
            for mask in 0u32..1 << 10 {
                let cand: Vec<usize> = (0..10).map(|i| ((mask >> i) & 1) as usize).collect();
                let mut w = DMatrix::zeros(2, 4);
                let mut ok = true;
                for m in 0..2 {
                    let members: Vec<usize> = (0..10).filter(|&i| cand[i] == m).collect();
                    if members.is_empty() {
                        ok = false;
                        break;
                    }
                    for f in 0..4 {
                        let mean = members.iter().map(|&i| x[(i, f)]).sum::<f64>() / members.len() as f64;
                        w[(m, f)] = 0.5 * mean + 0.5 * anchor[(m, f)];
                    }
                }
                if !ok {
                    continue;
                }
                let reassigned: Vec<usize> = (0..10)
                    .map(|i| {
                        let d: Vec<f64> = (0..2)
                            .map(|m| (0..4).map(|f| (x[(i, f)] - w[(m, f)]).powi(2)).sum())
                            .collect();
                        usize::from(d[1] < d[0])
                    })
                    .collect();
                if reassigned == cand {
                    fixed_points.push(cand);
                }
            }
            if got.sizes().iter().all(|&s| s > 0) {
                assert!(fixed_points.contains(&got.labels), "seed {seed}: {:?} not among {fixed_points:?}", got.labels);
            }
        }
    }

    #[test]
    fn two_blobs_match_brute_force_optimum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x = DMatrix::from_fn(12, 4, |i, _| if i < 6 { 0.0 } else { 10.0 } + rng.gen::<f64>());
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..(1 << 12) - 1 {
            let labels: Vec<usize> = (0..12).map(|i| ((mask >> i) & 1) as usize).collect();
            let c = cluster_means(&labels, 2, &x);
            let cost = kmeans::wcssd(&x, &labels, &c);
            if cost < best.0 {
                best = (cost, mask);
            }
        }
        let oracle: Vec<usize> = (0..12).map(|i| ((best.1 >> i) & 1) as usize).collect();
        let r = kmeans(&x, 2, 3).unwrap();
        assert_eq!(ari(&r.labels, &oracle).unwrap(), 1.0);
    }

    #[test]
    fn empty_cluster_keeps_centroid() {
        let x = DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0]);
        let far = DMatrix::from_row_slice(2, 4, &[0.0, 0.0, 0.0, 0.0, 50.0, 50.0, 50.0, 50.0]);
        let upd = update_clusters(&model(vec![0, 0], far.clone(), 0.5), &x, 1e-10).unwrap();
        assert_eq!(upd.labels, vec![0, 0]);
        assert_eq!(upd.centroids.row(1), far.row(1));
    }

    #[test]
    fn payoff_rules() {
        let a = DVector::from_vec(vec![2.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(payoff_features(Some(&a), Some(&b), 2), DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(payoff_features(Some(&a), Some(&a), 2), DVector::zeros(2));
        assert_eq!(payoff_features(Some(&a), None, 2), DVector::zeros(2));
    }

    #[test]
    fn mixing_weights_validated() {
        assert!(ClusterModel::new(vec![0], DMatrix::zeros(1, 4), 0.7, 0.7).is_err());
        assert!(ClusterModel::new(vec![1], DMatrix::zeros(1, 4), 0.5, 0.5).is_err());
    }

    #[test]
    fn transitions_sum_to_users() {
        let (unique, switches) = transition_counts(&[vec![0, 1, 1], vec![1, 1, 0], vec![0, 1, 0]]);
        assert_eq!(unique, vec![2, 1, 2]);
        assert_eq!(switches, vec![2, 0, 1]);
    }
}
