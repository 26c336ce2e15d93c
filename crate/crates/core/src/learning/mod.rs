//! Opponent models and the decision rules built on them.

mod boltzmann;
pub mod closed_form;
mod ekf;
mod fictitious;
mod learner;
mod repeated;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{ActionId, GameError};

pub use boltzmann::{boltzmann, boltzmann_jacobian};
pub use closed_form::{ekf_update_closed_form_2x2, ClosedFormReport, ClosedFormUpdate, Divergence};
pub use ekf::{
    ekf_fp_decide, ekf_innovation, ekf_predict, ekf_predict_with_noise, ekf_update, BeliefSnapshot,
    EkfParams, EkfUpdate, JacobianForm, ObsNoiseSchedule, PropensityBelief, UpdateDiagnostics,
    COV_TOLERANCE, INNOVATION_REGULARIZATION,
};
pub use fictitious::{fp_recursive_step, fp_strategy, fp_update, FictitiousPlayBelief};
pub use learner::{
    BeliefView, Decision, EkfFpSpec, FixedSpec, FpSpec, InitMean, InitWeights, Learner, LearnerSpec,
    UpdateMode,
};
pub use repeated::{
    coordinated_hold_start, run_repeated_game, run_repeated_game_with_hold, GameSource,
    RepeatedGameConfig, DEFAULT_HOLD_ITERATIONS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("action {action} out of range for {count} actions")]
    InvalidAction { action: usize, count: usize },
    #[error("belief weights sum to zero")]
    ZeroWeight,
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("time index must be >= 1")]
    InvalidTimeIndex,
    #[error("innovation covariance is singular even after regularization")]
    SingularInnovation,
    #[error(transparent)]
    Game(#[from] GameError),
}

/// The opponent's action seen at game iteration `time_index` (from 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub action: ActionId,
    pub time_index: u64,
}
