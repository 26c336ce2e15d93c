//! Classic fictitious play: count-based beliefs about one opponent.

use serde::{Deserialize, Serialize};

use super::{LearnError, Observation};
use crate::game::MixedStrategy;

/// Non-negative weight per opponent action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FictitiousPlayBelief {
    kappa: Vec<f64>,
}

impl FictitiousPlayBelief {
    pub fn new(kappa: Vec<f64>) -> Result<Self, LearnError> {
        if kappa.is_empty() {
            return Err(LearnError::DimensionMismatch("empty weight vector".into()));
        }
        if kappa.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(LearnError::InvalidBelief(format!("weights must be finite and >= 0: {kappa:?}")));
        }
        Ok(Self { kappa })
    }

    pub fn weights(&self) -> &[f64] {
        &self.kappa
    }

    pub fn total_weight(&self) -> f64 {
        self.kappa.iter().sum()
    }

    pub fn num_actions(&self) -> usize {
        self.kappa.len()
    }
}

impl TryFrom<Vec<f64>> for FictitiousPlayBelief {
    type Error = LearnError;

    fn try_from(kappa: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(kappa)
    }
}

impl From<FictitiousPlayBelief> for Vec<f64> {
    fn from(b: FictitiousPlayBelief) -> Self {
        b.kappa
    }
}

/// Adds one to the weight of the observed action.
pub fn fp_update(
    belief: &FictitiousPlayBelief,
    obs: &Observation,
) -> Result<FictitiousPlayBelief, LearnError> {
    let k = obs.action.index();
    if k >= belief.num_actions() {
        return Err(LearnError::InvalidAction { action: k, count: belief.num_actions() });
    }
    let mut next = belief.clone();
    next.kappa[k] += 1.0;
    Ok(next)
}

/// Weights normalized to a mixed strategy.
pub fn fp_strategy(belief: &FictitiousPlayBelief) -> Result<MixedStrategy, LearnError> {
    let total = belief.total_weight();
    if total <= 0.0 {
        return Err(LearnError::ZeroWeight);
    }
    let probs: Vec<f64> = belief.kappa.iter().map(|k| k / total).collect();
    MixedStrategy::new(probs).map_err(|e| LearnError::InvalidBelief(e.to_string()))
}

/// Running-average form of the strategy estimate:
/// `σ_t = (1 − 1/n) σ_{t−1} + (1/n) 1[obs]` where `n` is the total weight
/// after the update, i.e. `Σκ_0 + t`.
pub fn fp_recursive_step(
    previous: &MixedStrategy,
    obs: &Observation,
    total_weight_after: f64,
) -> Result<MixedStrategy, LearnError> {
    let k = obs.action.index();
    if k >= previous.len() {
        return Err(LearnError::InvalidAction { action: k, count: previous.len() });
    }
    if !(total_weight_after >= 1.0) {
        return Err(LearnError::ZeroWeight);
    }
    let step = 1.0 / total_weight_after;
    let probs = previous
        .probs()
        .iter()
        .enumerate()
        .map(|(m, p)| (1.0 - step) * p + if m == k { step } else { 0.0 })
        .collect();
    MixedStrategy::new(probs).map_err(|e| LearnError::InvalidBelief(e.to_string()))
}
