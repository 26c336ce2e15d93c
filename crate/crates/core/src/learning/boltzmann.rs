//! The Boltzmann (softmax) map from propensities to a mixed strategy, and its
//! exact Jacobian.

use nalgebra::DMatrix;

use super::LearnError;
use crate::game::MixedStrategy;

fn check_inputs(x: &[f64], tau: f64) -> Result<(), LearnError> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(LearnError::InvalidTemperature(tau));
    }
    if x.is_empty() {
        return Err(LearnError::DimensionMismatch("empty propensity vector".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite("propensity vector"));
    }
    Ok(())
}

/// Raw softmax probabilities, computed after subtracting the maximum.
pub(crate) fn softmax(x: &[f64], tau: f64) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = x.iter().map(|v| ((v - max) / tau).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= sum);
    e
}

/// `σ_k = exp(x_k/τ) / Σ_m exp(x_m/τ)`.
pub fn boltzmann(x: &[f64], tau: f64) -> Result<MixedStrategy, LearnError> {
    check_inputs(x, tau)?;
    Ok(MixedStrategy::from_normalized(softmax(x, tau)))
}

/// `∂σ_k/∂x_m = σ_k (δ_km − σ_m) / τ`.
pub fn boltzmann_jacobian(x: &[f64], tau: f64) -> Result<DMatrix<f64>, LearnError> {
    check_inputs(x, tau)?;
    Ok(jacobian_from_strategy(&softmax(x, tau), tau))
}

pub(crate) fn jacobian_from_strategy(sigma: &[f64], scale_tau: f64) -> DMatrix<f64> {
    let n = sigma.len();
    DMatrix::from_fn(n, n, |k, m| {
        let delta = if k == m { 1.0 } else { 0.0 };
        sigma[k] * (delta - sigma[m]) / scale_tau
    })
}
