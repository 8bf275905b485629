//! Multivariate Hawkes processes with exponential kernels.
//!
//! Five independent N-dimensional processes are modeled: tweets and retweets
//! for each news label, plus one like process whose dimension `i` counts likes
//! *received* by user `i`. Within a process an event of user `j` raises user
//! `i`'s intensity by `Φ[j][i] · ω e^{-ω age}`. The tweet and retweet kernels
//! are shared between the two labels; decays and base rates are per process.

mod fit;
mod mean;
mod simulate;
mod spectral;

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Event, Kind, Label};
use crate::error::{DcplError, Result};

pub use fit::{fit, fit_process_group, nmf, FitConfig, ProcessFit};
pub use mean::{expected_counts, MeanPropagator};
pub use simulate::{simulate, SimulationConfig, Simulator};
pub use spectral::{branching_spectral_radius, spectral_radius};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    FakeTweet,
    TrueTweet,
    FakeRetweet,
    TrueRetweet,
    Like,
}

impl Process {
    /// Simulation order within a stage: tweets (F, T), retweets (F, T), likes.
    pub const ALL: [Process; 5] = [
        Process::FakeTweet,
        Process::TrueTweet,
        Process::FakeRetweet,
        Process::TrueRetweet,
        Process::Like,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Process::FakeTweet => "fake_tweet",
            Process::TrueTweet => "true_tweet",
            Process::FakeRetweet => "fake_retweet",
            Process::TrueRetweet => "true_retweet",
            Process::Like => "like",
        }
    }

    pub fn from_name(name: &str) -> Option<Process> {
        Process::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn kind(self) -> Kind {
        match self {
            Process::FakeTweet | Process::TrueTweet => Kind::Tweet,
            Process::FakeRetweet | Process::TrueRetweet => Kind::Retweet,
            Process::Like => Kind::Like,
        }
    }

    pub fn label(self) -> Option<Label> {
        match self {
            Process::FakeTweet | Process::FakeRetweet => Some(Label::Fake),
            Process::TrueTweet | Process::TrueRetweet => Some(Label::True),
            Process::Like => None,
        }
    }

    pub fn of(kind: Kind, label: Option<Label>) -> Option<Process> {
        match (kind, label) {
            (Kind::Tweet, Some(Label::Fake)) => Some(Process::FakeTweet),
            (Kind::Tweet, Some(Label::True)) => Some(Process::TrueTweet),
            (Kind::Retweet, Some(Label::Fake)) => Some(Process::FakeRetweet),
            (Kind::Retweet, Some(Label::True)) => Some(Process::TrueRetweet),
            (Kind::Like, _) => Some(Process::Like),
            _ => None,
        }
    }

    /// Whether interventions are added to this process's base rate.
    pub fn is_intervened(self) -> bool {
        matches!(self, Process::TrueTweet | Process::TrueRetweet)
    }
}

/// Process and dimension an event counts toward. Likes count for the receiver.
pub fn event_dimension(event: &Event) -> Option<(Process, usize)> {
    let process = Process::of(event.kind, event.label)?;
    let dim = match event.kind {
        Kind::Like => event.target?,
        _ => event.user,
    };
    Some((process, dim))
}

/// Branching matrix `Φ` where entry `(j, i)` is the mean number of events of
/// `i` triggered by one event of `j`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Dense(DMatrix<f64>),
    /// `Φ = U Vᵀ` with nonnegative `N×r` factors.
    LowRank { u: DMatrix<f64>, v: DMatrix<f64> },
}

impl Kernel {
    pub fn zeros(n: usize) -> Self {
        Kernel::Dense(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        match self {
            Kernel::Dense(m) => m.nrows(),
            Kernel::LowRank { u, .. } => u.nrows(),
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        match self {
            Kernel::Dense(m) => m.clone(),
            Kernel::LowRank { u, v } => u * v.transpose(),
        }
    }

    pub fn entry(&self, j: usize, i: usize) -> f64 {
        match self {
            Kernel::Dense(m) => m[(j, i)],
            Kernel::LowRank { u, v } => u.row(j).dot(&v.row(i)),
        }
    }

    /// `Φᵀ x`: entry `i` is `Σ_j Φ[j][i] x[j]`.
    pub fn transpose_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Kernel::Dense(m) => m.tr_mul(x),
            Kernel::LowRank { u, v } => v * u.tr_mul(x),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        match self {
            Kernel::Dense(m) => *m *= factor,
            Kernel::LowRank { u, .. } => *u *= factor,
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral::branching_spectral_radius(self)
    }

    fn is_nonnegative(&self) -> bool {
        let ok = |m: &DMatrix<f64>| m.iter().all(|x| x.is_finite() && *x >= 0.0);
        match self {
            Kernel::Dense(m) => ok(m),
            Kernel::LowRank { u, v } => ok(u) && ok(v),
        }
    }
}

/// Parameters of one N-dimensional process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessParams {
    pub mu: DVector<f64>,
    pub omega: f64,
    pub kernel: Kernel,
}

impl ProcessParams {
    pub fn poisson(mu: DVector<f64>) -> Self {
        let n = mu.len();
        ProcessParams {
            mu,
            omega: 1.0,
            kernel: Kernel::zeros(n),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let n = self.mu.len();
        if self.kernel.n() != n {
            return Err(DcplError::invalid(format!(
                "{name}: kernel has {} rows, mu has {n}",
                self.kernel.n()
            )));
        }
        if let Kernel::LowRank { u, v } = &self.kernel {
            if v.nrows() != n || u.ncols() != v.ncols() {
                return Err(DcplError::invalid(format!("{name}: inconsistent low-rank factors")));
            }
        }
        if let Kernel::Dense(m) = &self.kernel {
            if m.ncols() != n {
                return Err(DcplError::invalid(format!("{name}: kernel must be square")));
            }
        }
        if self.mu.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(DcplError::invalid(format!("{name}: base rates must be nonnegative")));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(DcplError::invalid(format!("{name}: decay must be positive")));
        }
        if !self.kernel.is_nonnegative() {
            return Err(DcplError::invalid(format!("{name}: kernel must be nonnegative")));
        }
        Ok(())
    }
}

/// The five activity processes over a common user set.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesModel {
    processes: Vec<ProcessParams>,
}

impl HawkesModel {
    /// `params` in [`Process::ALL`] order.
    pub fn new(params: [ProcessParams; 5]) -> Result<Self> {
        let n = params[0].mu.len();
        for (p, prm) in Process::ALL.iter().zip(params.iter()) {
            prm.validate(p.name())?;
            if prm.mu.len() != n {
                return Err(DcplError::invalid(format!(
                    "{}: expected {n} users, got {}",
                    p.name(),
                    prm.mu.len()
                )));
            }
        }
        Ok(HawkesModel {
            processes: params.into(),
        })
    }

    /// All processes Poisson with the given per-process rates.
    pub fn poisson(rates: [DVector<f64>; 5]) -> Result<Self> {
        Self::new(rates.map(ProcessParams::poisson))
    }

    pub fn n_users(&self) -> usize {
        self.processes[0].mu.len()
    }

    pub fn params(&self, p: Process) -> &ProcessParams {
        &self.processes[p.index()]
    }

    pub fn params_mut(&mut self, p: Process) -> &mut ProcessParams {
        &mut self.processes[p.index()]
    }

    /// Errors when any kernel has spectral radius at or above one.
    pub fn check_stable(&self) -> Result<()> {
        for p in Process::ALL {
            let rho = self.params(p).kernel.spectral_radius();
            if rho >= 1.0 {
                return Err(DcplError::Unstable {
                    process: p.name().into(),
                    detail: format!("spectral radius {rho:.6} >= 1"),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDoc::from(self);
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| DcplError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DcplError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    processes: BTreeMap<String, ProcessDoc>,
}

#[derive(Serialize, Deserialize)]
struct ProcessDoc {
    mu: Vec<f64>,
    omega: f64,
    kernel: KernelDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KernelDoc {
    Dense {
        dense: Vec<Vec<f64>>,
    },
    LowRank {
        rank: usize,
        #[serde(rename = "U")]
        u: Vec<Vec<f64>>,
        #[serde(rename = "V")]
        v: Vec<Vec<f64>>,
    },
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(DcplError::invalid("ragged matrix in model document"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl From<&HawkesModel> for ModelDoc {
    fn from(model: &HawkesModel) -> Self {
        let processes = Process::ALL
            .iter()
            .map(|&p| {
                let prm = model.params(p);
                let kernel = match &prm.kernel {
                    Kernel::Dense(m) => KernelDoc::Dense { dense: rows_of(m) },
                    Kernel::LowRank { u, v } => KernelDoc::LowRank {
                        rank: u.ncols(),
                        u: rows_of(u),
                        v: rows_of(v),
                    },
                };
                (
                    p.name().to_string(),
                    ProcessDoc {
                        mu: prm.mu.iter().copied().collect(),
                        omega: prm.omega,
                        kernel,
                    },
                )
            })
            .collect();
        ModelDoc { processes }
    }
}

impl TryFrom<ModelDoc> for HawkesModel {
    type Error = DcplError;

    fn try_from(mut doc: ModelDoc) -> Result<Self> {
        let mut params = Vec::with_capacity(5);
        for p in Process::ALL {
            let pd = doc
                .processes
                .remove(p.name())
                .ok_or_else(|| DcplError::invalid(format!("model is missing process {}", p.name())))?;
            let n = pd.mu.len();
            let kernel = match pd.kernel {
                KernelDoc::Dense { dense } => Kernel::Dense(matrix_from_rows(&dense, n)?),
                KernelDoc::LowRank { rank, u, v } => Kernel::LowRank {
                    u: matrix_from_rows(&u, rank)?,
                    v: matrix_from_rows(&v, rank)?,
                },
            };
            params.push(ProcessParams {
                mu: DVector::from_vec(pd.mu),
                omega: pd.omega,
                kernel,
            });
        }
        if let Some(extra) = doc.processes.keys().next() {
            return Err(DcplError::invalid(format!("unknown process {extra}")));
        }
        let params: [ProcessParams; 5] = params.try_into().expect("five processes");
        HawkesModel::new(params)
    }
}

/// Decayed excitation `h_i(τ) = Σ_j Φ[j][i] Σ_{e of j, t_e < τ} ω e^{-ω(τ - t_e)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationState {
    pub tau: f64,
    pub values: DVector<f64>,
}

impl ExcitationState {
    pub fn zeros(n: usize, tau: f64) -> Self {
        ExcitationState {
            tau,
            values: DVector::zeros(n),
        }
    }

    /// Decays the state forward to `tau` with no new events.
    pub fn decayed_to(&self, omega: f64, tau: f64) -> Self {
        let factor = (-omega * (tau - self.tau)).exp();
        ExcitationState {
            tau,
            values: &self.values * factor,
        }
    }
}

/// Per-user intervention rates for one stage, added to the true-news base rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionPlan {
    pub stage: usize,
    pub tweet: Vec<f64>,
    pub retweet: Vec<f64>,
    pub budget_tweet: f64,
    pub budget_retweet: f64,
}

impl InterventionPlan {
    pub fn zero(stage: usize, n: usize) -> Self {
        InterventionPlan {
            stage,
            tweet: vec![0.0; n],
            retweet: vec![0.0; n],
            budget_tweet: 0.0,
            budget_retweet: 0.0,
        }
    }

    /// Extra base rate for process `p`, if it is intervened.
    pub fn for_process(&self, p: Process) -> Option<&[f64]> {
        match p {
            Process::TrueTweet => Some(&self.tweet),
            Process::TrueRetweet => Some(&self.retweet),
            _ => None,
        }
    }
}

/// Excitation of `process` at `tau` from all of its events in `events`,
/// computed with the exponential decay recursion in a single pass.
pub fn residual_excitation(
    model: &HawkesModel,
    process: Process,
    events: &[Event],
    tau: f64,
) -> Result<ExcitationState> {
    let prm = model.params(process);
    let n = model.n_users();
    let mut h = DVector::zeros(n);
    let mut last = f64::NEG_INFINITY;
    let dense = prm.kernel.dense();
    for e in events {
        let Some((p, dim)) = event_dimension(e) else { continue };
        if p != process {
            continue;
        }
        if e.t >= tau {
            return Err(DcplError::invalid(format!(
                "event at t = {} is not before tau = {tau}",
                e.t
            )));
        }
        if last.is_finite() {
            h *= (-prm.omega * (e.t - last)).exp();
        }
        h += dense.row(dim).transpose() * prm.omega;
        last = e.t;
    }
    if last.is_finite() {
        h *= (-prm.omega * (tau - last)).exp();
    }
    Ok(ExcitationState { tau, values: h })
}

/// Conditional intensity of every user at the state's reference time.
pub fn intensity_at(
    model: &HawkesModel,
    process: Process,
    exc: &ExcitationState,
    plan: Option<&InterventionPlan>,
) -> DVector<f64> {
    let prm = model.params(process);
    let mut lambda = &prm.mu + &exc.values;
    if let Some(extra) = plan.and_then(|p| p.for_process(process)) {
        for (l, a) in lambda.iter_mut().zip(extra) {
            *l += a;
        }
    }
    lambda.apply(|x| *x = x.max(0.0));
    lambda
}
