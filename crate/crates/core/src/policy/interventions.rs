use nalgebra::{DMatrix, DVector};

use super::ClusterActions;
use crate::error::{DcplError, Result};
use crate::hawkes::InterventionPlan;

/// How the retweet incentive relates to the tweet incentive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Separate tweet and pairwise retweet heads.
    Separate,
    /// The tweet incentive is reused for retweets.
    Tied,
}

/// Unnormalized user incentives before the budget is applied.
#[derive(Debug, Clone)]
pub struct RawUserActions {
    pub tweet: DVector<f64>,
    pub retweet: DVector<f64>,
    /// `W[m][i] = Σ_{j in m} d_j Φ[j][i]`.
    pub spread: DMatrix<f64>,
}

/// Distance of each user to their cluster centroid.
pub fn distance_weights(x: &DMatrix<f64>, labels: &[usize], centroids: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(labels.len(), |i, _| {
        (0..x.ncols())
            .map(|f| (x[(i, f)] - centroids[(labels[i], f)]).powi(2))
            .sum::<f64>()
            .sqrt()
    })
}

/// `ã_T,i = a_T[c(i)]·d_i` and
/// `ã_R,i = (1/N) Σ_j a_R[c(i)][c(j)]·d_i·d_j·Φ[j][i]`, grouped by the
/// cluster of `j` so the pairwise sum costs `O(N² + N·C)`.
pub fn raw_user_actions(
    actions: &ClusterActions,
    labels: &[usize],
    weights: &DVector<f64>,
    phi_retweet: &DMatrix<f64>,
    coupling: Coupling,
) -> RawUserActions {
    let n = labels.len();
    let c = actions.n_clusters();
    let tweet = DVector::from_fn(n, |i, _| actions.tweet[labels[i]] * weights[i]);
    let mut spread = DMatrix::zeros(c, n);
    if coupling == Coupling::Separate {
        for j in 0..n {
            let dj = weights[j];
            if dj == 0.0 {
                continue;
            }
            let m = labels[j];
            for i in 0..n {
                spread[(m, i)] += dj * phi_retweet[(j, i)];
            }
        }
    }
    let retweet = match coupling {
        Coupling::Tied => tweet.clone(),
        Coupling::Separate => DVector::from_fn(n, |i, _| {
            let ci = labels[i];
            let s: f64 = (0..c).map(|m| actions.retweet[(ci, m)] * spread[(m, i)]).sum();
            weights[i] * s / n as f64
        }),
    };
    RawUserActions {
        tweet,
        retweet,
        spread,
    }
}

/// Rescales to an L1 norm of `budget`; an all-zero input spreads the budget
/// evenly.
pub fn normalize_budget(raw: &DVector<f64>, budget: f64) -> Result<DVector<f64>> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(DcplError::invalid(format!("budget must be finite and nonnegative, got {budget}")));
    }
    let n = raw.len();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        Ok(raw * (budget / total))
    } else {
        Ok(DVector::from_element(n, budget / n as f64))
    }
}

pub fn user_interventions(
    actions: &ClusterActions,
    labels: &[usize],
    weights: &DVector<f64>,
    phi_retweet: &DMatrix<f64>,
    budgets: (f64, f64),
    coupling: Coupling,
    stage: usize,
) -> Result<InterventionPlan> {
    let raw = raw_user_actions(actions, labels, weights, phi_retweet, coupling);
    Ok(InterventionPlan {
        stage,
        tweet: normalize_budget(&raw.tweet, budgets.0)?.as_slice().to_vec(),
        retweet: normalize_budget(&raw.retweet, budgets.1)?.as_slice().to_vec(),
        budget_tweet: budgets.0,
        budget_retweet: budgets.1,
    })
}

/// Gradient through [`normalize_budget`].
pub fn normalize_budget_backward(raw: &DVector<f64>, budget: f64, g_out: &DVector<f64>) -> DVector<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        let inner = g_out.dot(raw) / total;
        g_out.map(|g| (g - inner) * budget / total)
    } else {
        DVector::zeros(raw.len())
    }
}

/// Gradients of the cluster actions from gradients of the raw user actions.
pub fn raw_user_actions_backward(
    actions: &ClusterActions,
    labels: &[usize],
    weights: &DVector<f64>,
    raw: &RawUserActions,
    g_tweet: &DVector<f64>,
    g_retweet: &DVector<f64>,
    coupling: Coupling,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = labels.len();
    let c = actions.n_clusters();
    let mut gt = DVector::zeros(c);
    let mut gr = DMatrix::zeros(c, c);
    for i in 0..n {
        gt[labels[i]] += g_tweet[i] * weights[i];
    }
    match coupling {
        Coupling::Tied => {
            for i in 0..n {
                gt[labels[i]] += g_retweet[i] * weights[i];
            }
        }
        Coupling::Separate => {
            for i in 0..n {
                let scale = g_retweet[i] * weights[i] / n as f64;
                if scale == 0.0 {
                    continue;
                }
                let ci = labels[i];
                for m in 0..c {
                    gr[(ci, m)] += scale * raw.spread[(m, i)];
                }
            }
        }
    }
    (gt, gr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_distances_give_uniform_plan() {
        let a = ClusterActions {
            tweet: DVector::from_vec(vec![1.0, 2.0]),
            retweet: DMatrix::from_element(2, 2, 1.0),
        };
        let plan = user_interventions(&a, &[0, 1, 1], &DVector::zeros(3), &DMatrix::from_element(3, 3, 0.1), (6.0, 3.0), Coupling::Separate, 0).unwrap();
        assert_eq!(plan.tweet, vec![2.0; 3]);
        assert_eq!(plan.retweet, vec![1.0; 3]);
    }

    #[test]
    fn normalization_arithmetic() {
        let a = normalize_budget(&DVector::from_vec(vec![1.0, 3.0]), 8.0).unwrap();
        assert_eq!(a, DVector::from_vec(vec![2.0, 6.0]));
        assert!(normalize_budget(&a, -1.0).is_err());
    }

    #[test]
    fn pairwise_matches_double_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 3;
        let labels = vec![0, 1, 0];
        let a = ClusterActions {
            tweet: DVector::from_fn(2, |_, _| rng.gen::<f64>()),
            retweet: DMatrix::from_fn(2, 2, |_, _| rng.gen::<f64>()),
        };
        let d = DVector::from_fn(n, |_, _| rng.gen::<f64>());
        let phi = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() * 0.3);
        let raw = raw_user_actions(&a, &labels, &d, &phi, Coupling::Separate);
        for i in 0..n {
            let mut naive = 0.0;
            for j in 0..n {
                let alpha = a.retweet[(labels[i], labels[j])] * d[i] * d[j];
                naive += alpha * phi[(j, i)];
            }
            naive /= n as f64;
            assert!((raw.retweet[i] - naive).abs() < 1e-14);
            assert!((raw.tweet[i] - a.tweet[labels[i]] * d[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn tied_heads_share_raw_actions() {
        let a = ClusterActions {
            tweet: DVector::from_vec(vec![0.5, 1.5, 2.5]),
            retweet: DMatrix::from_element(3, 3, 9.0),
        };
        let raw = raw_user_actions(&a, &[0, 1, 2], &DVector::from_element(3, 1.0), &DMatrix::zeros(3, 3), Coupling::Tied);
        assert_eq!(raw.tweet, raw.retweet);
    }

    #[test]
    fn budget_holds_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.gen_range(1..12);
            let raw = DVector::from_fn(n, |_, _| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() * 100.0 });
            let b = rng.gen::<f64>() * 500.0;
            let a = normalize_budget(&raw, b).unwrap();
            assert!((a.sum() - b).abs() <= 1e-9 * b.max(1.0));
            assert!(a.iter().all(|v| *v >= 0.0));
        }
    }
}
