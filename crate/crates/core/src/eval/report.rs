use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ImpactRow, Performance};
use crate::clustering::{ari, nmi, transition_counts, ScoreRow};
use crate::error::{DcplError, Result};

/// Mean with its standard error; the error is absent for a single sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub se: Option<f64>,
}

pub fn summarize(values: &[f64]) -> MeanSe {
    let n = values.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: None };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = (n > 1).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    MeanSe { mean, se }
}

/// Results of one seed of one method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub with: Performance,
    pub without: Performance,
    pub impact: Vec<ImpactRow>,
    /// Memberships of each training stage in the final epoch.
    pub stage_labels: Vec<Vec<usize>>,
}

pub struct ReportInputs<'a> {
    pub method: &'a str,
    pub runs: &'a [RunSummary],
    pub scree: Option<&'a [ScoreRow]>,
}

#[derive(Serialize)]
struct Report<'a> {
    method: &'a str,
    seeds: Vec<u64>,
    performance: MeanSe,
    performance_without: MeanSe,
    reward: MeanSe,
    reward_without: MeanSe,
    mean_ari: Option<MeanSe>,
    impact: Vec<ImpactRow>,
}

/// Counts of users per value: entry `v` is how many users have value `v`.
pub fn transition_histogram(values: &[usize]) -> Vec<usize> {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut h = vec![0; max + 1];
    for &v in values {
        h[v] += 1;
    }
    h
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| DcplError::io(&path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn mean_impact(runs: &[RunSummary]) -> Vec<ImpactRow> {
    let Some(first) = runs.first() else { return Vec::new() };
    let m = runs.len() as f64;
    first
        .impact
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let avg = |f: fn(&ImpactRow) -> f64| runs.iter().map(|r| f(&r.impact[k])).sum::<f64>() / m;
            ImpactRow {
                gap: row.gap,
                delta: row.delta,
                selected_any: avg(|r| r.selected_any),
                missed_any: avg(|r| r.missed_any),
                selected_true: avg(|r| r.selected_true),
                missed_true: avg(|r| r.missed_true),
            }
        })
        .collect()
}

fn alignment(labels: &[Vec<usize>]) -> Result<Vec<(usize, f64, f64)>> {
    labels
        .windows(2)
        .enumerate()
        .map(|(k, w)| Ok((k + 1, ari(&w[0], &w[1])?, nmi(&w[0], &w[1])?)))
        .collect()
}

/// Writes `report.json`, `stages.csv`, `alignment.csv`, `transitions.csv`,
/// `impact.csv` and, when scores are given, `scree.csv`.
pub fn emit_report(dir: &Path, inp: &ReportInputs<'_>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| DcplError::io(dir, e))?;
    let runs = inp.runs;
    let perf: Vec<f64> = runs.iter().map(|r| r.with.performance).collect();
    let perf0: Vec<f64> = runs.iter().map(|r| r.without.performance).collect();
    let rew: Vec<f64> = runs.iter().map(|r| r.with.total_reward).collect();
    let rew0: Vec<f64> = runs.iter().map(|r| r.without.total_reward).collect();

    let mut aris = Vec::new();
    let mut w = writer(dir, "alignment.csv")?;
    w.write_record(["seed", "stage", "ari", "nmi"])?;
    for r in runs {
        let rows = alignment(&r.stage_labels)?;
        if !rows.is_empty() {
            aris.push(rows.iter().map(|x| x.1).sum::<f64>() / rows.len() as f64);
        }
        for (stage, a, m) in rows {
            w.serialize((r.seed, stage, a, m))?;
        }
    }
    w.flush().map_err(|e| DcplError::io(dir.join("alignment.csv"), e))?;

    let report = Report {
        method: inp.method,
        seeds: runs.iter().map(|r| r.seed).collect(),
        performance: summarize(&perf),
        performance_without: summarize(&perf0),
        reward: summarize(&rew),
        reward_without: summarize(&rew0),
        mean_ari: (!aris.is_empty()).then(|| summarize(&aris)),
        impact: mean_impact(runs),
    };
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").map_err(|e| DcplError::io(&path, e))?;

    let mut w = writer(dir, "stages.csv")?;
    w.write_record([
        "seed", "variant", "stage", "reward_tweet", "reward_retweet", "reward", "exposed_true", "exposed_fake", "exposed_both", "fraction",
    ])?;
    for r in runs {
        for (variant, p) in [("with", &r.with), ("without", &r.without)] {
            for s in &p.stages {
                w.serialize((
                    r.seed,
                    variant,
                    s.stage,
                    s.reward_tweet,
                    s.reward_retweet,
                    s.reward,
                    s.exposed_true,
                    s.exposed_fake,
                    s.exposed_both,
                    s.fraction,
                ))?;
            }
        }
    }
    w.flush().map_err(|e| DcplError::io(dir.join("stages.csv"), e))?;

    let mut w = writer(dir, "transitions.csv")?;
    w.write_record(["seed", "measure", "value", "users"])?;
    for r in runs {
        let (unique, switches) = transition_counts(&r.stage_labels);
        for (measure, vals) in [("unique_clusters", unique), ("transitions", switches)] {
            for (v, users) in transition_histogram(&vals).into_iter().enumerate() {
                w.serialize((r.seed, measure, v, users))?;
            }
        }
    }
    w.flush().map_err(|e| DcplError::io(dir.join("transitions.csv"), e))?;

    let mut w = writer(dir, "impact.csv")?;
    w.write_record(["gap", "delta", "selected_any", "missed_any", "selected_true", "missed_true"])?;
    for row in &report.impact {
        let delta = row.delta.map_or_else(|| "mean".to_string(), |d| d.to_string());
        w.serialize((row.gap, delta, row.selected_any, row.missed_any, row.selected_true, row.missed_true))?;
    }
    w.flush().map_err(|e| DcplError::io(dir.join("impact.csv"), e))?;

    if let Some(scree) = inp.scree {
        let mut w = writer(dir, "scree.csv")?;
        w.write_record(["C", "BIC", "WC-SSD"])?;
        for row in scree {
            w.serialize((row.c, row.bic, row.wcssd))?;
        }
        w.flush().map_err(|e| DcplError::io(dir.join("scree.csv"), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_has_no_error() {
        let s = summarize(&[3.0]);
        assert_eq!(s.mean, 3.0);
        assert!(s.se.is_none());
        assert!(!serde_json::to_string(&s).unwrap().contains("se"));
        let s = summarize(&[1.0, 3.0]);
        assert!((s.se.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_sums_to_users() {
        let h = transition_histogram(&[1, 2, 2, 3, 1, 1]);
        assert_eq!(h, vec![0, 3, 2, 1]);
        assert_eq!(h.iter().sum::<usize>(), 6);
    }
}
