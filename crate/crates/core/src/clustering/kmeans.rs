use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{assign, means_or_keep};
use crate::error::{DcplError, Result};

pub const LLOYD_TOLERANCE: f64 = 1e-8;
pub const LLOYD_MAX_ITERATIONS: usize = 300;
const RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: DMatrix<f64>,
    pub wcssd: f64,
}

pub(crate) fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, m: usize) -> f64 {
    (0..x.ncols()).map(|f| (x[(i, f)] - c[(m, f)]).powi(2)).sum()
}

/// Within-cluster sum of squared distances.
pub fn wcssd(x: &DMatrix<f64>, labels: &[usize], centroids: &DMatrix<f64>) -> f64 {
    labels.iter().enumerate().map(|(i, &m)| sq_dist(x, i, centroids, m)).sum()
}

/// k-means++ seeding: each new centroid is drawn with probability
/// proportional to the squared distance to the nearest chosen one.
pub fn kmeans_pp_init(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = x.nrows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| row_dist(x, i, chosen[0])).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(pick);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(row_dist(x, i, pick));
        }
    }
    DMatrix::from_fn(k, x.ncols(), |m, f| x[(chosen[m], f)])
}

fn row_dist(x: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    (0..x.ncols()).map(|f| (x[(a, f)] - x[(b, f)]).powi(2)).sum()
}

/// Lloyd iterations from the given centroids until the centroid shift drops
/// below tolerance. Empty clusters keep their centroid.
pub fn lloyd(x: &DMatrix<f64>, mut centroids: DMatrix<f64>) -> KMeansResult {
    let mut labels = assign(x, &centroids);
    for _ in 0..LLOYD_MAX_ITERATIONS {
        let next = means_or_keep(x, &labels, &centroids);
        let shift = (&next - &centroids).norm();
        centroids = next;
        labels = assign(x, &centroids);
        if shift < LLOYD_TOLERANCE {
            break;
        }
    }
    let wcssd = wcssd(x, &labels, &centroids);
    KMeansResult {
        labels,
        centroids,
        wcssd,
    }
}

/// Best of several seeded k-means++ runs.
pub fn kmeans(x: &DMatrix<f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(DcplError::invalid(format!("cluster count {k} outside 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..RESTARTS {
        let init = kmeans_pp_init(x, k, &mut rng);
        let run = lloyd(x, init);
        if best.as_ref().map_or(true, |b| run.wcssd < b.wcssd) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub c: usize,
    pub wcssd: f64,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub rows: Vec<ScoreRow>,
    pub chosen: Option<usize>,
}

/// BIC of a spherical Gaussian mixture with hard assignments.
pub fn bic(x: &DMatrix<f64>, labels: &[usize], k: usize, wcssd: f64) -> f64 {
    let n = x.nrows() as f64;
    let d = x.ncols() as f64;
    let scale = x.iter().map(|v| v * v).sum::<f64>() / (n * d);
    let var = (wcssd / (n * d)).max(1e-12 * scale.max(1e-300));
    let mut sizes = vec![0.0; k];
    for &l in labels {
        sizes[l] += 1.0;
    }
    let mix: f64 = sizes.iter().filter(|&&s| s > 0.0).map(|&s| s * (s / n).ln()).sum();
    let ll = -0.5 * n * d * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * wcssd / var + mix;
    let params = k as f64 * d + 1.0 + (k as f64 - 1.0);
    -2.0 * ll + params * n.ln()
}

/// Index of the largest positive second difference, ties to the earlier one.
pub fn elbow(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 1..values.len().saturating_sub(1) {
        let d2 = values[i - 1] - 2.0 * values[i] + values[i + 1];
        if d2 > 0.0 && best.map_or(true, |(_, b)| d2 > b) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, _)| i)
}

/// Scores each candidate count and picks the WC-SSD elbow.
///
/// Runs are nested: the solution for each count is warm-started from the
/// previous count's centroids plus one k-means++ draw per extra centroid, and
/// the better of that and a fresh run is kept, so WC-SSD never increases
/// along the sorted candidate list.
pub fn select_num_clusters(x: &DMatrix<f64>, candidates: &[usize], seed: u64) -> Result<Selection> {
    let n = x.nrows();
    let mut cands = candidates.to_vec();
    cands.sort_unstable();
    cands.dedup();
    if let Some(&bad) = cands.iter().find(|&&c| c == 0 || c > n) {
        return Err(DcplError::invalid(format!("candidate cluster count {bad} outside 1..={n}")));
    }
    let fresh: Vec<KMeansResult> = cands
        .par_iter()
        .map(|&c| kmeans(x, c, seed.wrapping_add(c as u64)))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut rows = Vec::with_capacity(cands.len());
    let mut prev: Option<KMeansResult> = None;
    for (&c, fresh) in cands.iter().zip(fresh) {
        let mut best = fresh;
        if let Some(p) = &prev {
            let warm = lloyd(x, extend_centroids(x, &p.centroids, c, &mut rng));
            if warm.wcssd <= best.wcssd {
                best = warm;
            }
        }
        rows.push(ScoreRow {
            c,
            wcssd: best.wcssd,
            bic: bic(x, &best.labels, c, best.wcssd),
        });
        prev = Some(best);
    }
    let chosen = if rows.len() >= 3 {
        let w: Vec<f64> = rows.iter().map(|r| r.wcssd).collect();
        elbow(&w).map(|i| rows[i].c)
    } else {
        None
    };
    Ok(Selection { rows, chosen })
}

fn extend_centroids(x: &DMatrix<f64>, base: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let d = x.ncols();
    let mut rows: Vec<Vec<f64>> = (0..base.nrows())
        .map(|m| (0..d).map(|f| base[(m, f)]).collect())
        .collect();
    while rows.len() < k {
        let current = DMatrix::from_fn(rows.len(), d, |m, f| rows[m][f]);
        let dists: Vec<f64> = (0..x.nrows())
            .map(|i| (0..rows.len()).map(|m| sq_dist(x, i, &current, m)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = dists.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = x.nrows() - 1;
            for (i, &dd) in dists.iter().enumerate() {
                if r < dd {
                    pick = i;
                    break;
                }
                r -= dd;
            }
            pick
        } else {
            rng.gen_range(0..x.nrows())
        };
        rows.push((0..d).map(|f| x[(pick, f)]).collect());
    }
    DMatrix::from_fn(k, d, |m, f| rows[m][f])
}
