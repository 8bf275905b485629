use log::warn;
use serde::Serialize;

use crate::error::{DcplError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveTrace {
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub returns: Vec<f64>,
    pub advantages: Vec<f64>,
}

/// `D_k = Σ_{j≥k} γ^{j-k} r_j`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (k, r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[k] = acc;
    }
    out
}

/// Actor objective `J_θ = Σ_k (D_k − V(s_k))` and critic objective
/// `J_φ = −Σ_k |V(s_k) − D_k|`, both to be maximized.
pub fn total_objective(rewards: &[f64], values: &[f64], gamma: f64) -> Result<(f64, f64, ObjectiveTrace)> {
    if rewards.is_empty() {
        return Err(DcplError::invalid("objective needs at least one stage"));
    }
    if rewards.len() != values.len() {
        return Err(DcplError::Dimension {
            expected: rewards.len(),
            got: values.len(),
        });
    }
    let returns = discounted_returns(rewards, gamma);
    let advantages: Vec<f64> = returns.iter().zip(values).map(|(d, v)| d - v).collect();
    let j_theta = advantages.iter().sum();
    let j_phi = -advantages.iter().map(|b| b.abs()).sum::<f64>();
    Ok((
        j_theta,
        j_phi,
        ObjectiveTrace {
            rewards: rewards.to_vec(),
            values: values.to_vec(),
            returns,
            advantages,
        },
    ))
}

/// Gradient ascent step with the gradient rescaled to at most `clip` in
/// Euclidean norm. Returns false, leaving the parameters untouched, when the
/// gradient is not finite.
pub fn sgd_step(params: &mut [f64], grad: &[f64], lr: f64, clip: f64) -> bool {
    assert_eq!(params.len(), grad.len(), "parameter and gradient lengths differ");
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !norm.is_finite() {
        warn!("skipping update with non-finite gradient");
        return false;
    }
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (p, g) in params.iter_mut().zip(grad) {
        *p += lr * scale * g;
    }
    true
}
