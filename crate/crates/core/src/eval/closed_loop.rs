use nalgebra::DMatrix;

use super::{performance, Performance};
use crate::data::{EventLog, Network, StagePartition};
use crate::error::{DcplError, Result};
use crate::hawkes::{simulate, HawkesModel, InterventionPlan, SimulationConfig, Simulator};
use crate::policy::{PolicyNet, RewardModel, ValueNet};
use crate::trainer::{StageDriver, TrainConfig};

/// Learned policy plus the final memberships and features it acts on.
pub struct ClosedLoop<'a> {
    pub model: &'a HawkesModel,
    pub net: &'a Network,
    pub policy: &'a PolicyNet,
    pub value: &'a ValueNet,
    pub cfg: &'a TrainConfig,
    pub labels: Vec<usize>,
    pub features: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopRun {
    pub with: EventLog,
    pub without: EventLog,
    pub plans: Vec<InterventionPlan>,
    pub perf_with: Performance,
    pub perf_without: Performance,
}

/// Simulates the evaluation window twice from the same seed: once applying
/// the policy's plan at the start of each stage (computed from the events
/// simulated so far), once with no intervention.
pub fn evaluate_closed_loop(cl: &ClosedLoop<'_>, part: StagePartition, history: &EventLog, budgets: &[(f64, f64)], seed: u64) -> Result<ClosedLoopRun> {
    if budgets.len() != part.n_stages {
        return Err(DcplError::invalid(format!("expected {} evaluation budgets, got {}", part.n_stages, budgets.len())));
    }
    let n = cl.net.n_users();
    let rm = RewardModel::new(cl.model, cl.net, part.dt)?;
    let c = cl.cfg.method.effective_clusters(cl.cfg.n_clusters, n);
    let mut driver = StageDriver::new(cl.cfg.method, c, cl.cfg, cl.labels.clone(), cl.features.clone(), false);
    let history = EventLog::new(history.before(part.start).to_vec());
    let mut sim = Simulator::new(cl.model, cl.net, part, &history, seed, SimulationConfig::default())?;
    let mut plans = Vec::with_capacity(part.n_stages);
    while !sim.is_done() {
        let k = sim.next_stage();
        let seen = history.merged(&EventLog::new(sim.events().to_vec()));
        let ctx = rm.stage_context(cl.model, &seen, &part, k)?;
        let out = driver
            .stage(cl.policy, cl.value, &rm, &ctx, budgets[k])
            .map_err(|e| e.context(format!("evaluation stage {k}")))?;
        sim.step(Some(&out.record.plan))?;
        plans.push(out.record.plan);
    }
    let with = sim.into_log();
    let without = simulate(cl.model, cl.net, part, &history, &[], seed, SimulationConfig::default())?;
    Ok(ClosedLoopRun {
        perf_with: performance(&with, cl.net, &part)?,
        perf_without: performance(&without, cl.net, &part)?,
        with,
        without,
        plans,
    })
}
