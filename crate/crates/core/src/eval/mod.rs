//! Empirical reward, the performance metric, held-out impact of selected
//! users, closed-loop evaluation and report files.

mod closed_loop;
mod report;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{col, exposure_counts, EventLog, Kind, Label, Network, NetworkState, StagePartition};
use crate::error::{DcplError, Result};

pub use closed_loop::{evaluate_closed_loop, ClosedLoop, ClosedLoopRun};
pub use report::{emit_report, summarize, transition_histogram, MeanSe, ReportInputs, RunSummary};

/// Realized reward and exposure sets of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    pub stage: usize,
    pub reward_tweet: f64,
    pub reward_retweet: f64,
    pub reward: f64,
    pub exposed_true: usize,
    pub exposed_fake: usize,
    pub exposed_both: usize,
    /// `|L_T ∩ L_F| / |L_F|`, 1 when nobody saw fake news.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub stages: Vec<StageMetrics>,
    pub total_reward: f64,
    pub performance: f64,
}

fn stage_counts(log: &EventLog, part: &StagePartition, n: usize, stage: usize) -> NetworkState {
    let (a, b) = part.stage_window(stage);
    NetworkState::from_window(log, n, a, b)
}

/// `R_z = (1/N)·n(T,z)ᵀ GᵀG n(F,z)` from realized counts, per stage.
pub fn empirical_reward(log: &EventLog, net: &Network, part: &StagePartition) -> Vec<[f64; 2]> {
    let n = net.n_users();
    (0..part.n_stages)
        .map(|k| {
            let s = stage_counts(log, part, n, k);
            let r = |t: usize, f: usize| s.column(t).dot(&net.gram_apply(&s.column(f))) / n as f64;
            [r(col::TRUE_TWEET, col::FAKE_TWEET), r(col::TRUE_RETWEET, col::FAKE_RETWEET)]
        })
        .collect()
}

/// `𝒫 = Σ_k R_k·|L_T ∩ L_F|/|L_F|`, with exposure sets built from tweets and
/// retweets together.
pub fn performance(log: &EventLog, net: &Network, part: &StagePartition) -> Result<Performance> {
    let n = net.n_users();
    let rewards = empirical_reward(log, net, part);
    let mut stages = Vec::with_capacity(part.n_stages);
    for (k, r) in rewards.iter().enumerate() {
        let s = stage_counts(log, part, n, k);
        let posts_true: DVector<f64> = s.column(col::TRUE_TWEET) + s.column(col::TRUE_RETWEET);
        let posts_fake: DVector<f64> = s.column(col::FAKE_TWEET) + s.column(col::FAKE_RETWEET);
        let lt = exposure_counts(net, &posts_true)?;
        let lf = exposure_counts(net, &posts_fake)?;
        let exposed_true = lt.iter().filter(|v| **v > 0.0).count();
        let exposed_fake = lf.iter().filter(|v| **v > 0.0).count();
        let exposed_both = lt.iter().zip(lf.iter()).filter(|(a, b)| **a > 0.0 && **b > 0.0).count();
        let fraction = if exposed_fake == 0 {
            1.0
        } else {
            exposed_both as f64 / exposed_fake as f64
        };
        stages.push(StageMetrics {
            stage: k,
            reward_tweet: r[0],
            reward_retweet: r[1],
            reward: r[0] + r[1],
            exposed_true,
            exposed_fake,
            exposed_both,
            fraction,
        });
    }
    Ok(Performance {
        total_reward: stages.iter().map(|s| s.reward).sum(),
        performance: stages.iter().map(|s| s.reward * s.fraction).sum(),
        stages,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactConfig {
    /// Gaps in stages.
    pub gaps: Vec<usize>,
    /// Window lengths in stages.
    pub deltas: Vec<usize>,
}

impl Default for ImpactConfig {
    fn default() -> Self {
        ImpactConfig {
            gaps: vec![0, 2, 5, 8],
            deltas: vec![1, 2, 3, 4, 5],
        }
    }
}

/// Held-out retweets of posts by selected (`S`) and missed (`M`) users, summed
/// over every `τ`. `delta` is `None` on the rows averaged over the configured
/// window lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub gap: usize,
    pub delta: Option<usize>,
    pub selected_any: f64,
    pub missed_any: f64,
    pub selected_true: f64,
    pub missed_true: f64,
}

/// Users selected by `τ`: positive true-news posting count since the start
/// of the evaluation window.
fn selected_by(sed: &EventLog, n: usize, start: f64, tau: f64) -> Vec<bool> {
    let mut sel = vec![false; n];
    for e in sed.window(start, tau) {
        if matches!(e.kind, Kind::Tweet | Kind::Retweet) && e.label == Some(Label::True) {
            sel[e.user] = true;
        }
    }
    sel
}

/// Counts held-out retweets in `[τ+g, τ+g+Δ)` by whether their target was
/// selected at `τ`, for each `τ` at a stage start of the evaluation window.
pub fn impact_analysis(sed: &EventLog, heldout: &EventLog, sed_part: &StagePartition, n_users: usize, cfg: &ImpactConfig) -> Result<Vec<ImpactRow>> {
    if cfg.deltas.is_empty() {
        return Err(DcplError::invalid("impact analysis needs at least one window length"));
    }
    let end = sed_part.end();
    if heldout.events().first().is_some_and(|e| e.t < end) {
        return Err(DcplError::invalid(format!("held-out events start before the evaluation window ends at {end}")));
    }
    if sed.events().last().is_some_and(|e| e.t >= end) {
        return Err(DcplError::invalid("evaluation log extends past its window"));
    }
    let dt = sed_part.dt;
    let selections: Vec<(f64, Vec<bool>)> = (0..sed_part.n_stages)
        .map(|k| {
            let tau = sed_part.boundary(k);
            (tau, selected_by(sed, n_users, sed_part.start, tau))
        })
        .collect();
    let mut rows = Vec::new();
    for &g in &cfg.gaps {
        let mut per_delta = Vec::with_capacity(cfg.deltas.len());
        for &d in &cfg.deltas {
            let mut row = ImpactRow {
                gap: g,
                delta: Some(d),
                selected_any: 0.0,
                missed_any: 0.0,
                selected_true: 0.0,
                missed_true: 0.0,
            };
            for (tau, sel) in &selections {
                let a = tau + g as f64 * dt;
                let b = a + d as f64 * dt;
                for e in heldout.window(a, b) {
                    let (Kind::Retweet, Some(target)) = (e.kind, e.target) else { continue };
                    let is_true = e.label == Some(Label::True);
                    let w_true = if is_true { 1.0 } else { 0.0 };
                    if sel[target] {
                        row.selected_any += 1.0;
                        row.selected_true += w_true;
                    } else {
                        row.missed_any += 1.0;
                        row.missed_true += w_true;
                    }
                }
            }
            per_delta.push(row);
        }
        let m = per_delta.len() as f64;
        let mean = |f: fn(&ImpactRow) -> f64| per_delta.iter().map(f).sum::<f64>() / m;
        let avg = ImpactRow {
            gap: g,
            delta: None,
            selected_any: mean(|r| r.selected_any),
            missed_any: mean(|r| r.missed_any),
            selected_true: mean(|r| r.selected_true),
            missed_true: mean(|r| r.missed_true),
        };
        rows.extend(per_delta);
        rows.push(avg);
    }
    Ok(rows)
}

/// One-sided sign test of `a > b` over paired samples: p-value of at least
/// the observed number of wins among non-tied pairs under a fair coin.
pub fn sign_test(a: &[f64], b: &[f64]) -> (usize, usize, f64) {
    let wins = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let losses = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let n = wins + losses;
    if n == 0 {
        return (0, 0, 1.0);
    }
    let mut p = 0.0;
    for k in wins..=n {
        p += binomial(n, k) * 0.5f64.powi(n as i32);
    }
    (wins, n, p.min(1.0))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Rescales values so the largest is 100; all zeros stay zero.
pub fn relative_to_best(values: &[f64]) -> Vec<f64> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(best > 0.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| 100.0 * v / best).collect()
}
