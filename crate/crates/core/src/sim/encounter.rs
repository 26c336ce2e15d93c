use std::collections::BTreeMap;

use super::config::{EncounterConfig, TickTiming};
use super::uav::{infer_opponent_action, visible, AbsenceTimer, Heading, Phase, UavState};
use super::SimError;
use crate::game::{make_tcas_game, ActionId, NormalFormGame};
use crate::learning::{Learner, LearnerSpec};
use crate::trace::{DecisionTrace, EventKind, TraceEvent, TraceSummary};

const DISTANCE_TOLERANCE: f64 = 1e-9;

/// World state after some number of ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterState {
    pub uavs: [UavState; 2],
    pub tick: u64,
    pub sim_time: f64,
    pub absence_timers: [AbsenceTimer; 2],
    /// Ticks left until a running altitude change completes.
    pub change_remaining: [u64; 2],
    /// Ticks spent passing.
    pub passing_ticks: [u64; 2],
    pub start_pos: [f64; 2],
    pub epochs_decided: [u32; 2],
    pub visible: [bool; 2],
    pub reached_passing: [bool; 2],
    pub collision: bool,
    pub inference_violations: u32,
}

impl EncounterState {
    fn initial(config: &EncounterConfig) -> Self {
        let start_pos = [0.0, config.corridor_length_m];
        let uavs = [
            UavState::hovering(config.initial_bands[0], start_pos[0], Heading::Forward),
            UavState::hovering(config.initial_bands[1], start_pos[1], Heading::Backward),
        ];
        Self {
            uavs,
            tick: 0,
            sim_time: 0.0,
            absence_timers: [AbsenceTimer::default(); 2],
            change_remaining: [0; 2],
            passing_ticks: [0; 2],
            start_pos,
            epochs_decided: [0; 2],
            visible: [false; 2],
            reached_passing: [false; 2],
            collision: false,
            inference_violations: 0,
        }
    }

    /// Seconds since `uav` last decided, or `None` before its first decision.
    pub fn epoch_clock(&self, uav: usize, config: &EncounterConfig, timing: &TickTiming) -> Option<f64> {
        let off = timing.offsets[uav];
        if self.tick < off || self.epochs_decided[uav] == 0 {
            return None;
        }
        Some(((self.tick - off) % timing.epoch) as f64 * config.tick_seconds)
    }

    pub fn absence_seconds(&self, uav: usize, config: &EncounterConfig) -> f64 {
        self.absence_timers[uav].ticks() as f64 * config.tick_seconds
    }
}

/// A running encounter: world state, both learners and the events so far.
pub struct Encounter {
    config: EncounterConfig,
    timing: TickTiming,
    game: NormalFormGame,
    learners: [Learner; 2],
    state: EncounterState,
    events: Vec<TraceEvent>,
    pending: BTreeMap<u32, [Option<ActionId>; 2]>,
    outcomes: Vec<(u32, [ActionId; 2], f64)>,
    end_tick: u64,
    hard_cap: u64,
}

impl Encounter {
    /// Validates the config, builds both learners from `specs` and evaluates
    /// tick 0, where the first decisions fall unless offset.
    pub fn new(config: &EncounterConfig, specs: &[LearnerSpec; 2]) -> Result<Self, SimError> {
        let checked = EncounterConfig { learners: specs.clone(), ..config.clone() };
        let timing = checked.validate()?;
        let game = make_tcas_game(config.num_bands, config.reward).map_err(crate::learning::LearnError::from)?;
        let n = config.num_bands;
        let learners = [
            Learner::new(&specs[0], n, n, config.seed, 1)?,
            Learner::new(&specs[1], n, n, config.seed, 2)?,
        ];
        let end_tick = u64::from(config.max_epochs) * timing.epoch + timing.offsets.iter().max().copied().unwrap_or(0);
        let pass_ticks = (config.corridor_length_m / (config.pass_speed_mps * config.tick_seconds)).ceil() as u64;
        let hard_cap = 2 * (end_tick + timing.epoch + timing.absence + timing.altitude_change + pass_ticks);
        let mut enc = Self {
            state: EncounterState::initial(config),
            config: checked,
            timing,
            game,
            learners,
            events: Vec::new(),
            pending: BTreeMap::new(),
            outcomes: Vec::new(),
            end_tick,
            hard_cap,
        };
        enc.evaluate([false; 2])?;
        Ok(enc)
    }

    pub fn state(&self) -> &EncounterState {
        &self.state
    }

    pub fn config(&self) -> &EncounterConfig {
        &self.config
    }

    pub fn timing(&self) -> &TickTiming {
        &self.timing
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn is_finished(&self) -> bool {
        let s = &self.state;
        if s.collision || s.tick >= self.hard_cap {
            return true;
        }
        if s.uavs.iter().all(|u| u.phase == Phase::Done) {
            return true;
        }
        let settling = s.uavs.iter().zip(&s.absence_timers).any(|(u, timer)| {
            matches!(u.phase, Phase::Passing | Phase::ChangingAltitude)
                || (u.phase == Phase::Hovering && timer.ticks() > 0)
        });
        s.tick >= self.end_tick && !settling
    }

    fn time(&self) -> f64 {
        (self.state.tick as f64 * self.config.tick_seconds * 1e9).round() / 1e9
    }

    fn push(&mut self, uav: Option<usize>, kind: EventKind) {
        let t = self.time();
        self.events.push(TraceEvent { t, uav, kind });
    }

    fn change_phase(&mut self, i: usize, to: Phase) -> Result<(), SimError> {
        let from = self.state.uavs[i].transition(to)?;
        let u = &self.state.uavs[i];
        let kind = EventKind::PhaseChange {
            from,
            to,
            altitude_m: self.config.band_altitude(u.altitude_band),
            position_m: u.longitudinal_pos,
        };
        self.push(Some(i), kind);
        Ok(())
    }

    /// Advances one tick: movement first, then sensing, timers and decisions.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.state.tick += 1;
        self.state.sim_time = self.time();
        let hovered = self.state.uavs.clone().map(|u| u.phase == Phase::Hovering);
        for i in 0..2 {
            match self.state.uavs[i].phase {
                Phase::ChangingAltitude => {
                    self.state.change_remaining[i] = self.state.change_remaining[i].saturating_sub(1);
                    if self.state.change_remaining[i] == 0 {
                        let u = &mut self.state.uavs[i];
                        u.altitude_band = u.target_band.take().unwrap_or(u.altitude_band);
                        self.change_phase(i, Phase::Hovering)?;
                    }
                }
                Phase::Passing => {
                    self.state.passing_ticks[i] += 1;
                    let dist = self.state.passing_ticks[i] as f64 * self.config.pass_speed_mps * self.config.tick_seconds;
                    let dist = dist.min(self.config.corridor_length_m);
                    let u = &mut self.state.uavs[i];
                    u.longitudinal_pos = self.state.start_pos[i] + u.heading.sign() * dist;
                    if dist >= self.config.corridor_length_m - DISTANCE_TOLERANCE {
                        self.change_phase(i, Phase::Done)?;
                    }
                }
                Phase::Hovering | Phase::Done => {}
            }
        }
        self.evaluate(hovered)
    }

    /// Sensing and decisions at the current tick. `hovered` marks UAVs that
    /// hovered through the whole preceding interval; only those accumulate
    /// absence.
    fn evaluate(&mut self, hovered: [bool; 2]) -> Result<(), SimError> {
        let [a, b] = &self.state.uavs;
        let vis = [visible(a, b), visible(b, a)];
        self.state.visible = vis;

        for i in 0..2 {
            let (me, other) = (&self.state.uavs[i], &self.state.uavs[1 - i]);
            if me.phase != Phase::Done && other.phase != Phase::Done {
                let inferred = infer_opponent_action(me, vis[i], self.config.num_bands)?;
                if inferred != other.altitude_band {
                    self.state.inference_violations += 1;
                }
            }
        }

        if !self.state.collision {
            let [a, b] = &self.state.uavs;
            let separation = (a.longitudinal_pos - b.longitudinal_pos).abs();
            let passing = a.phase == Phase::Passing || b.phase == Phase::Passing;
            if passing && a.altitude_band == b.altitude_band && separation < self.config.collision_radius_m {
                self.state.collision = true;
                let band = a.altitude_band;
                self.push(None, EventKind::Collision { band, separation_m: separation });
                return Ok(());
            }
        }

        for i in 0..2 {
            let counting = hovered[i] && self.state.uavs[i].phase == Phase::Hovering;
            self.state.absence_timers[i].observe(vis[i], counting);
        }

        for i in 0..2 {
            if self.state.uavs[i].phase == Phase::Hovering
                && self.state.absence_timers[i].ticks() >= self.timing.absence
            {
                self.state.reached_passing[i] = true;
                self.change_phase(i, Phase::Passing)?;
            }
        }

        for i in 0..2 {
            if self.is_boundary(i) {
                self.decide(i, vis[i])?;
            }
        }
        self.emit_outcomes();
        Ok(())
    }

    fn is_boundary(&self, i: usize) -> bool {
        let s = &self.state;
        let off = self.timing.offsets[i];
        s.uavs[i].phase == Phase::Hovering
            && s.epochs_decided[i] < self.config.max_epochs
            && s.tick >= off
            && (s.tick - off).is_multiple_of(self.timing.epoch)
    }

    fn decide(&mut self, i: usize, saw: bool) -> Result<(), SimError> {
        let done = self.state.epochs_decided[i];
        if done > 0 {
            let observed = infer_opponent_action(&self.state.uavs[i], saw, self.config.num_bands)?;
            self.learners[i].observe(observed)?;
            self.push(Some(i), EventKind::Observation { epoch: done, observed, saw: Some(saw) });
        }
        let epoch = done + 1;
        let band = self.state.uavs[i].altitude_band;
        let decision = self.learners[i].decide(&self.game, i, Some(band))?;
        let kind = EventKind::Decision {
            epoch,
            action: decision.action,
            opponent_strategy: decision.opponent_strategy.map(|s| s.into_vec()),
            belief: self.learners[i].belief_view(),
        };
        self.push(Some(i), kind);
        self.state.epochs_decided[i] = epoch;
        self.pending.entry(epoch).or_insert([None, None])[i] = Some(decision.action);
        if decision.action != band {
            self.state.uavs[i].target_band = Some(decision.action);
            self.state.change_remaining[i] = self.timing.altitude_change;
            self.change_phase(i, Phase::ChangingAltitude)?;
        }
        Ok(())
    }

    fn emit_outcomes(&mut self) {
        let complete: Vec<u32> =
            self.pending.iter().filter(|(_, d)| d.iter().all(Option::is_some)).map(|(&e, _)| e).collect();
        for epoch in complete {
            let Some([Some(a0), Some(a1)]) = self.pending.remove(&epoch) else { continue };
            let reward = self.game.reward(0, &[a0, a1]).unwrap_or(0.0);
            self.outcomes.push((epoch, [a0, a1], reward));
            self.push(None, EventKind::Outcome { epoch, actions: vec![a0, a1], reward });
        }
    }

    /// Runs ticks until the encounter ends.
    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    pub fn summary(&self) -> TraceSummary {
        let s = &self.state;
        let last = self.outcomes.last();
        let split = last.is_some_and(|(_, a, _)| a[0] != a[1]);
        let coordinated = split && s.reached_passing.iter().all(|&p| p);
        TraceSummary {
            coordinated,
            epochs_to_coordination: if coordinated { last.map(|(e, _, _)| *e) } else { None },
            passed: Some(!s.collision && s.uavs.iter().all(|u| u.phase == Phase::Done)),
            collision: Some(s.collision),
            decision_epochs: s.epochs_decided.iter().copied().max().unwrap_or(0),
            total_reward: self.outcomes.iter().map(|(_, _, r)| r).sum(),
            inference_violations: s.inference_violations,
            regularized_updates: self.learners.iter().map(Learner::regularized_updates).sum(),
        }
    }

    pub fn into_trace(self) -> DecisionTrace {
        let summary = self.summary();
        DecisionTrace { events: self.events, summary }
    }
}

/// Simulates one encounter with `specs` in place of the config's learners.
pub fn run_encounter(config: &EncounterConfig, specs: &[LearnerSpec; 2]) -> Result<DecisionTrace, SimError> {
    let mut enc = Encounter::new(config, specs)?;
    enc.run_to_end()?;
    Ok(enc.into_trace())
}
