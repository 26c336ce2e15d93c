//! Repeated play of a two-player normal-form game between two learners.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{LearnError, Learner, LearnerSpec};
use crate::game::{canonical_game, enumerate_pure_nash, ActionId, GameDocument, NormalFormGame};
use crate::trace::{DecisionTrace, EventKind, TraceEvent, TraceSummary};

/// Consecutive coordinated iterations required to count a run as coordinated.
pub const DEFAULT_HOLD_ITERATIONS: u32 = 20;

/// A game named from the canonical set or given as a full document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    Named(String),
    Document(GameDocument),
}

impl GameSource {
    pub fn build(&self) -> Result<NormalFormGame, LearnError> {
        Ok(match self {
            GameSource::Named(name) => canonical_game(name)?,
            GameSource::Document(doc) => NormalFormGame::from_document(doc.clone())?,
        })
    }
}

/// Config document for repeated-game runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepeatedGameConfig {
    pub game: GameSource,
    pub learners: [LearnerSpec; 2],
    pub iterations: u32,
    pub hold_iterations: u32,
    pub seed: u64,
}

impl Default for RepeatedGameConfig {
    fn default() -> Self {
        Self {
            game: GameSource::Named("tcas2".into()),
            learners: [LearnerSpec::default(), LearnerSpec::default()],
            iterations: 50,
            hold_iterations: DEFAULT_HOLD_ITERATIONS,
            seed: 0,
        }
    }
}

impl RepeatedGameConfig {
    pub fn validate(&self) -> Result<NormalFormGame, LearnError> {
        let game = self.game.build()?;
        if game.num_players() != 2 {
            return Err(LearnError::InvalidParams("repeated games need 2 players".into()));
        }
        if self.iterations == 0 {
            return Err(LearnError::InvalidParams("iterations must be >= 1".into()));
        }
        for (p, spec) in self.learners.iter().enumerate() {
            spec.validate(game.action_count(p), game.action_count(1 - p))?;
        }
        Ok(game)
    }

    pub fn run(&self, seed: u64) -> Result<DecisionTrace, LearnError> {
        let game = self.validate()?;
        run_repeated_game_with_hold(&game, &self.learners, self.iterations, seed, self.hold_iterations)
    }
}

/// First iteration (1-based) of a run of at least `hold` consecutive
/// coordinated iterations.
pub fn coordinated_hold_start(coordinated: &[bool], hold: u32) -> Option<u32> {
    let hold = hold.max(1) as usize;
    let mut run = 0usize;
    for (i, &c) in coordinated.iter().enumerate() {
        run = if c { run + 1 } else { 0 };
        if run == hold {
            return Some((i + 1 - hold + 1) as u32);
        }
    }
    None
}

pub fn run_repeated_game(
    game: &NormalFormGame,
    learners: &[LearnerSpec; 2],
    iterations: u32,
    seed: u64,
) -> Result<DecisionTrace, LearnError> {
    run_repeated_game_with_hold(game, learners, iterations, seed, DEFAULT_HOLD_ITERATIONS)
}

/// Runs predict → decide → observe → update for `iterations` rounds.
///
/// A joint action counts as coordinated when it is a pure Nash equilibrium of
/// the game. The summary reports whether some stretch of `hold` consecutive
/// coordinated iterations occurred, and where it started.
pub fn run_repeated_game_with_hold(
    game: &NormalFormGame,
    learners: &[LearnerSpec; 2],
    iterations: u32,
    seed: u64,
    hold: u32,
) -> Result<DecisionTrace, LearnError> {
    if game.num_players() != 2 {
        return Err(LearnError::InvalidParams("repeated games need 2 players".into()));
    }
    let equilibria: HashSet<Vec<ActionId>> = enumerate_pure_nash(game)?.into_iter().collect();
    let mut agents = [
        Learner::new(&learners[0], game.action_count(0), game.action_count(1), seed, 1)?,
        Learner::new(&learners[1], game.action_count(1), game.action_count(0), seed, 2)?,
    ];
    let mut current: [Option<ActionId>; 2] = [None, None];
    let mut events = Vec::with_capacity(iterations as usize * 5);
    let mut coordinated = Vec::with_capacity(iterations as usize);
    let mut total_reward = 0.0;

    for epoch in 1..=iterations {
        let t = f64::from(epoch);
        let mut joint = Vec::with_capacity(2);
        for (p, agent) in agents.iter_mut().enumerate() {
            let decision = agent.decide(game, p, current[p])?;
            events.push(TraceEvent {
                t,
                uav: Some(p),
                kind: EventKind::Decision {
                    epoch,
                    action: decision.action,
                    opponent_strategy: decision.opponent_strategy.map(|s| s.into_vec()),
                    belief: agent.belief_view(),
                },
            });
            joint.push(decision.action);
        }
        let rewards = game.rewards(&joint)?;
        total_reward += rewards[0];
        coordinated.push(equilibria.contains(&joint));
        events.push(TraceEvent {
            t,
            uav: None,
            kind: EventKind::Outcome { epoch, actions: joint.clone(), reward: rewards[0] },
        });
        for (p, agent) in agents.iter_mut().enumerate() {
            let seen = joint[1 - p];
            agent.observe(seen)?;
            events.push(TraceEvent {
                t,
                uav: Some(p),
                kind: EventKind::Observation { epoch, observed: seen, saw: None },
            });
        }
        current = [Some(joint[0]), Some(joint[1])];
    }

    let start = coordinated_hold_start(&coordinated, hold);
    Ok(DecisionTrace {
        events,
        summary: TraceSummary {
            coordinated: start.is_some(),
            epochs_to_coordination: start,
            passed: None,
            collision: None,
            decision_epochs: iterations,
            total_reward,
            inference_violations: 0,
            regularized_updates: agents.iter().map(Learner::regularized_updates).sum(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::make_tcas_game;
    use crate::learning::{FpSpec, InitWeights};
    use crate::game::TieBreak;

    #[test]
    fn hold_start() {
        assert_eq!(coordinated_hold_start(&[false, true, true, true], 3), Some(2));
        assert_eq!(coordinated_hold_start(&[true, true, false, true, true], 3), None);
        assert_eq!(coordinated_hold_start(&[true], 1), Some(1));
    }

    #[test]
    fn identical_classic_fp_never_coordinates() {
        let g = make_tcas_game(2, 1.0).unwrap();
        let spec = LearnerSpec::Fp(FpSpec {
            tie_break: TieBreak::First,
            seed: None,
            kappa0: InitWeights::Explicit(vec![1.0, 1.0]),
        });
        let trace = run_repeated_game(&g, &[spec.clone(), spec], 100, 3).unwrap();
        assert!(trace.joint_decisions().iter().all(|j| j[0] == j[1]));
        assert_eq!(trace.summary.total_reward, 0.0);
        assert!(!trace.summary.coordinated);
    }

    #[test]
    fn fixed_split_coordinates_immediately() {
        let g = make_tcas_game(2, 1.0).unwrap();
        let trace =
            run_repeated_game(&g, &[LearnerSpec::fixed(0), LearnerSpec::fixed(1)], 25, 0).unwrap();
        assert_eq!(trace.summary.epochs_to_coordination, Some(1));
        assert_eq!(trace.summary.total_reward, 25.0);
    }

    #[test]
    fn config_defaults_and_named_game() {
        let cfg: RepeatedGameConfig = serde_json::from_str(r#"{"game":"matching_pennies"}"#).unwrap();
        assert_eq!(cfg.iterations, 50);
        assert!(cfg.validate().is_ok());
        let bad: RepeatedGameConfig = serde_json::from_str(r#"{"game":"nope"}"#).unwrap();
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<RepeatedGameConfig>(r#"{"rounds":3}"#).is_err());
    }
}
