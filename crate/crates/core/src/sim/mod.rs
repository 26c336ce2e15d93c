//! Two-UAV head-on encounter in a corridor. Each UAV hovers, picks an altitude
//! band every decision epoch from what its camera sees, and starts passing once
//! the opponent has been out of view long enough.

mod config;
mod encounter;
mod uav;

use thiserror::Error;

use crate::learning::LearnError;

pub use config::{EncounterConfig, TickTiming};
pub use encounter::{run_encounter, Encounter, EncounterState};
pub use uav::{infer_opponent_action, visible, AbsenceTimer, Heading, Phase, UavState, HIGH, LOW};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("ambiguous_inference: cannot infer the opponent band among {num_bands} bands")]
    AmbiguousInference { num_bands: usize },
    #[error("illegal phase transition {from:?} -> {to:?}")]
    IllegalTransition { from: Phase, to: Phase },
    #[error(transparent)]
    Learn(#[from] LearnError),
}
