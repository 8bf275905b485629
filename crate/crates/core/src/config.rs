//! Run configuration: one JSON document with a section per stage of the
//! pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DcplError, Result};
use crate::eval::ImpactConfig;
use crate::hawkes::FitConfig;
use crate::policy::{InputScaling, DEFAULT_CLIP, DEFAULT_HIDDEN};
use crate::trainer::{Method, ReclusterSchedule, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub events: Option<PathBuf>,
    pub network: Option<PathBuf>,
    pub n_users: Option<usize>,
    pub dt: f64,
    pub train: [f64; 2],
    pub std: [f64; 2],
    pub sed: [f64; 2],
    pub heldout: [f64; 2],
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            events: None,
            network: None,
            n_users: None,
            dt: 1.0,
            train: [0.0, 10.0],
            std: [10.0, 20.0],
            sed: [20.0, 30.0],
            heldout: [30.0, 40.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteringConfig {
    /// Fixed cluster count; chosen from `candidates` when absent.
    pub n_clusters: Option<usize>,
    pub candidates: Vec<usize>,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            n_clusters: Some(8),
            candidates: (2..=15).collect(),
            eps1: 0.5,
            eps2: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub input_scaling: InputScaling,
    pub clip: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            hidden: vec![DEFAULT_HIDDEN, DEFAULT_HIDDEN],
            value_hidden: vec![DEFAULT_HIDDEN],
            input_scaling: InputScaling::Log1p,
            clip: DEFAULT_CLIP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub eta_theta: f64,
    pub eta_phi: f64,
    pub delta: f64,
    pub eta_e_schedule: ReclusterSchedule,
    pub max_epochs: usize,
    pub checkpoint_every: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainerConfig {
            gamma: t.gamma,
            eta_theta: t.eta_theta,
            eta_phi: t.eta_phi,
            delta: t.delta,
            eta_e_schedule: t.eta_e_schedule,
            max_epochs: t.max_epochs,
            checkpoint_every: t.checkpoint_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct EvalConfig {
    pub impact: ImpactConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub hawkes: FitConfig,
    pub clustering: ClusteringConfig,
    pub policy: PolicyConfig,
    pub trainer: TrainerConfig,
    pub eval: EvalConfig,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            hawkes: FitConfig::default(),
            clustering: ClusteringConfig::default(),
            policy: PolicyConfig::default(),
            trainer: TrainerConfig::default(),
            eval: EvalConfig::default(),
            methods: vec![Method::Dcpl],
            seeds: vec![0],
        }
    }
}

fn check_window(name: &str, w: [f64; 2], dt: f64) -> Result<()> {
    let k = (w[1] - w[0]) / dt;
    if !(w[1] > w[0]) || (k - k.round()).abs() > 1e-9 {
        return Err(DcplError::invalid(format!("{name} window [{}, {}) is not a positive multiple of dt = {dt}", w[0], w[1])));
    }
    Ok(())
}

impl RunConfig {
    /// Reads a config; relative data paths resolve against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DcplError::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| DcplError::invalid(format!("{}: {e}", path.display())))?;
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let base = parent.canonicalize().unwrap_or_else(|_| parent.to_path_buf());
        for p in [&mut cfg.data.events, &mut cfg.data.network].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| DcplError::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if !(d.dt > 0.0) {
            return Err(DcplError::invalid("dt must be positive"));
        }
        for (name, w) in [("train", d.train), ("std", d.std), ("sed", d.sed), ("heldout", d.heldout)] {
            check_window(name, w, d.dt)?;
        }
        if d.train[1] > d.std[0] || d.std[1] > d.sed[0] || d.sed[1] > d.heldout[0] {
            return Err(DcplError::invalid("windows must be ordered train, std, sed, heldout without overlap"));
        }
        if self.clustering.n_clusters.is_none() && self.clustering.candidates.len() < 3 {
            return Err(DcplError::invalid("cluster selection needs at least 3 candidates"));
        }
        if self.methods.is_empty() || self.seeds.is_empty() {
            return Err(DcplError::invalid("at least one method and one seed are required"));
        }
        self.train_config(Method::Dcpl, self.clustering.n_clusters.unwrap_or(1), 0, Vec::new())
            .validate()
    }

    /// Trainer settings for one method, seed and budget sequence.
    pub fn train_config(&self, method: Method, n_clusters: usize, seed: u64, budgets: Vec<(f64, f64)>) -> TrainConfig {
        let t = &self.trainer;
        TrainConfig {
            gamma: t.gamma,
            eta_theta: t.eta_theta,
            eta_phi: t.eta_phi,
            delta: t.delta,
            eps1: self.clustering.eps1,
            eps2: self.clustering.eps2,
            eta_e_schedule: t.eta_e_schedule.clone(),
            max_epochs: t.max_epochs,
            budgets,
            seed,
            method,
            n_clusters,
            policy_hidden: self.policy.hidden.clone(),
            value_hidden: self.policy.value_hidden.clone(),
            clip: self.policy.clip,
            input_scaling: self.policy.input_scaling,
            checkpoint_every: t.checkpoint_every,
        }
    }
}
