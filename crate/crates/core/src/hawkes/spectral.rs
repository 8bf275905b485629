use nalgebra::{DMatrix, DVector};

use super::Kernel;

const TOLERANCE: f64 = 1e-8;
const MAX_ITERATIONS: usize = 10_000;

/// Spectral radius of a nonnegative branching matrix. For a low-rank pair the
/// nonzero spectrum of `U Vᵀ` equals that of the `r×r` matrix `Vᵀ U`.
pub fn branching_spectral_radius(kernel: &Kernel) -> f64 {
    match kernel {
        Kernel::Dense(m) => spectral_radius(m),
        Kernel::LowRank { u, v } => spectral_radius(&v.tr_mul(u)),
    }
}

/// Largest eigenvalue modulus of a square nonnegative matrix by power
/// iteration from the all-ones vector.
///
/// Periodic matrices make plain power iteration oscillate; when the estimate
/// has not settled within the cap the iteration is rerun on `A + I`, whose
/// Perron root is `ρ(A) + 1` and which is aperiodic.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    match power_iteration(m, 0.0) {
        Some(rho) => rho,
        None => power_iteration(m, 1.0).map_or_else(|| last_estimate(m, 1.0), |r| r) - 1.0,
    }
    .max(0.0)
}

fn power_iteration(m: &DMatrix<f64>, shift: f64) -> Option<f64> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut prev = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        let mut y = m * &x;
        if shift != 0.0 {
            y += &x * shift;
        }
        let norm = y.norm();
        if norm == 0.0 {
            return Some(shift);
        }
        if (norm - prev).abs() <= TOLERANCE * norm.max(1.0) {
            return Some(norm);
        }
        prev = norm;
        x = y / norm;
    }
    None
}

fn last_estimate(m: &DMatrix<f64>, shift: f64) -> f64 {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut norm = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let y = m * &x + &x * shift;
        norm = y.norm();
        if norm == 0.0 {
            break;
        }
        x = y / norm;
    }
    norm
}
