//! Closed-form stage means.
//!
//! With `u = μ + a` constant over a stage and `g` the mean excitation, the
//! mean intensity `m = u + g` obeys `g' = ω(Φᵀ m − g)`. The augmented linear
//! system over `(g, ∫g, u)` is integrated exactly with one matrix exponential,
//! which only depends on the process and the stage length. The stage count is
//! `E[n] = u·ΔT + ∫g`, an affine map of `(g(τ_k), u)`.

use nalgebra::{DMatrix, DVector};

use super::{ExcitationState, HawkesModel, InterventionPlan, Process, ProcessParams};
use crate::error::{DcplError, Result};

#[derive(Debug, Clone)]
pub struct MeanPropagator {
    dt: f64,
    /// `∂E[n]/∂g(τ_k)`.
    count_from_excitation: DMatrix<f64>,
    /// `∂E[n]/∂u`, which is also the Jacobian with respect to the intervention.
    count_from_rate: DMatrix<f64>,
    next_from_excitation: DMatrix<f64>,
    next_from_rate: DMatrix<f64>,
}

impl MeanPropagator {
    pub fn new(params: &ProcessParams, dt: f64) -> Result<Self> {
        let rho = params.kernel.spectral_radius();
        if rho >= 1.0 {
            return Err(DcplError::Unstable {
                process: "mean propagator".into(),
                detail: format!("spectral radius {rho:.6} >= 1"),
            });
        }
        let n = params.mu.len();
        let omega = params.omega;
        let phi_t = params.kernel.dense().transpose();
        let mut sys = DMatrix::zeros(3 * n, 3 * n);
        // g' = ω(Φᵀ − I) g + ωΦᵀ u
        sys.view_mut((0, 0), (n, n))
            .copy_from(&((&phi_t - DMatrix::identity(n, n)) * omega));
        sys.view_mut((0, 2 * n), (n, n)).copy_from(&(&phi_t * omega));
        // (∫g)' = g
        sys.view_mut((n, 0), (n, n)).fill_with_identity();
        let expm = (sys * dt).exp();
        let mut count_from_rate = expm.view((n, 2 * n), (n, n)).into_owned();
        for i in 0..n {
            count_from_rate[(i, i)] += dt;
        }
        Ok(MeanPropagator {
            dt,
            count_from_excitation: expm.view((n, 0), (n, n)).into_owned(),
            count_from_rate,
            next_from_excitation: expm.view((0, 0), (n, n)).into_owned(),
            next_from_rate: expm.view((0, 2 * n), (n, n)).into_owned(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Expected per-user counts over one stage.
    pub fn expected_counts(&self, excitation: &DVector<f64>, rate: &DVector<f64>) -> DVector<f64> {
        &self.count_from_excitation * excitation + &self.count_from_rate * rate
    }

    /// Mean excitation at the end of the stage.
    pub fn advance(&self, excitation: &DVector<f64>, rate: &DVector<f64>) -> DVector<f64> {
        &self.next_from_excitation * excitation + &self.next_from_rate * rate
    }

    /// `∂E[n]/∂a`; entries are nonnegative for a nonnegative kernel.
    pub fn rate_jacobian(&self) -> &DMatrix<f64> {
        &self.count_from_rate
    }

    pub fn excitation_jacobian(&self) -> &DMatrix<f64> {
        &self.count_from_excitation
    }
}

/// Expected counts of `process` over a stage of length `dt` starting from
/// `exc`, with the plan's intervention when the process is intervened.
pub fn expected_counts(
    model: &HawkesModel,
    process: Process,
    dt: f64,
    exc: &ExcitationState,
    plan: Option<&InterventionPlan>,
) -> Result<DVector<f64>> {
    let prm = model.params(process);
    let prop = MeanPropagator::new(prm, dt)?;
    let mut rate = prm.mu.clone();
    if let Some(extra) = plan.and_then(|p| p.for_process(process)) {
        for (r, a) in rate.iter_mut().zip(extra) {
            *r += a;
        }
    }
    Ok(prop.expected_counts(&exc.values, &rate))
}
