use serde::{Deserialize, Serialize};

use super::SimError;
use crate::game::ActionId;

/// Upper altitude band, matching action 0 of the two-band game.
pub const HIGH: ActionId = ActionId(0);
/// Lower altitude band, matching action 1 of the two-band game.
pub const LOW: ActionId = ActionId(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heading {
    Forward,
    Backward,
}

impl Heading {
    pub fn sign(self) -> f64 {
        match self {
            Heading::Forward => 1.0,
            Heading::Backward => -1.0,
        }
    }
}

/// Mission phase of one UAV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Hovering,
    ChangingAltitude,
    Passing,
    Done,
}

impl Phase {
    pub fn can_transition_to(self, next: Phase) -> bool {
        matches!(
            (self, next),
            (Phase::Hovering, Phase::ChangingAltitude)
                | (Phase::ChangingAltitude, Phase::Hovering)
                | (Phase::Hovering, Phase::Passing)
                | (Phase::Passing, Phase::Done)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    /// Band used for visibility. While changing altitude this is still the
    /// band being left.
    pub altitude_band: ActionId,
    pub longitudinal_pos: f64,
    pub heading: Heading,
    pub phase: Phase,
    /// Destination band while `ChangingAltitude`.
    pub target_band: Option<ActionId>,
}

impl UavState {
    pub fn hovering(band: ActionId, pos: f64, heading: Heading) -> Self {
        Self {
            altitude_band: band,
            longitudinal_pos: pos,
            heading,
            phase: Phase::Hovering,
            target_band: None,
        }
    }

    /// Moves to `next`, refusing transitions outside the mission state machine.
    pub fn transition(&mut self, next: Phase) -> Result<Phase, SimError> {
        if !self.phase.can_transition_to(next) {
            return Err(SimError::IllegalTransition { from: self.phase, to: next });
        }
        let prev = self.phase;
        self.phase = next;
        Ok(prev)
    }

    /// True when `other` is in front of this UAV along its heading.
    pub fn is_ahead(&self, other: &UavState) -> bool {
        (other.longitudinal_pos - self.longitudinal_pos) * self.heading.sign() > 0.0
    }
}

/// Length of the current stretch of ticks without sight of the opponent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AbsenceTimer {
    ticks: u64,
}

impl AbsenceTimer {
    /// Records one tick. A sighting resets the timer; otherwise it advances
    /// only when `counting`, and holds its value when not.
    pub fn observe(&mut self, visible: bool, counting: bool) -> u64 {
        if visible {
            self.ticks = 0;
        } else if counting {
            self.ticks += 1;
        }
        self.ticks
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }
}

/// The forward camera sees `other` when both share a band, `other` is ahead,
/// and neither has finished.
pub fn visible(observer: &UavState, other: &UavState) -> bool {
    observer.phase != Phase::Done
        && other.phase != Phase::Done
        && observer.altitude_band == other.altitude_band
        && observer.is_ahead(other)
}

/// Infers the opponent's band from whether it was seen: the observer's own
/// band if seen, the other band if not. Only defined for two bands.
pub fn infer_opponent_action(
    observer: &UavState,
    saw_opponent: bool,
    num_bands: usize,
) -> Result<ActionId, SimError> {
    if num_bands != 2 {
        return Err(SimError::AmbiguousInference { num_bands });
    }
    let own = observer.altitude_band.index();
    if own >= 2 {
        return Err(SimError::AmbiguousInference { num_bands });
    }
    Ok(if saw_opponent { ActionId(own) } else { ActionId(1 - own) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: ActionId, b: ActionId) -> (UavState, UavState) {
        (UavState::hovering(a, 0.0, Heading::Forward), UavState::hovering(b, 10.0, Heading::Backward))
    }

    #[test]
    fn facing_in_same_band_are_visible() {
        let (a, b) = pair(LOW, LOW);
        assert!(visible(&a, &b) && visible(&b, &a));
    }

    #[test]
    fn different_bands_are_invisible() {
        let (a, b) = pair(LOW, HIGH);
        assert!(!visible(&a, &b) && !visible(&b, &a));
    }

    #[test]
    fn passed_opponent_is_behind() {
        let (mut a, mut b) = pair(HIGH, HIGH);
        a.longitudinal_pos = 7.0;
        b.longitudinal_pos = 3.0;
        assert!(!visible(&a, &b) && !visible(&b, &a));
    }

    #[test]
    fn done_uavs_are_invisible() {
        let (a, mut b) = pair(LOW, LOW);
        b.phase = Phase::Done;
        assert!(!visible(&a, &b));
    }

    #[test]
    fn inference_examples() {
        let low = UavState::hovering(LOW, 0.0, Heading::Forward);
        let high = UavState::hovering(HIGH, 0.0, Heading::Forward);
        assert_eq!(infer_opponent_action(&low, true, 2).unwrap(), LOW);
        assert_eq!(infer_opponent_action(&low, false, 2).unwrap(), HIGH);
        assert_eq!(infer_opponent_action(&high, false, 2).unwrap(), LOW);
        assert_eq!(
            infer_opponent_action(&low, false, 3).unwrap_err(),
            SimError::AmbiguousInference { num_bands: 3 }
        );
    }

    #[test]
    fn timer_resets_on_sighting() {
        let mut t = AbsenceTimer::default();
        for _ in 0..30 {
            t.observe(false, true);
        }
        t.observe(true, true);
        for _ in 0..30 {
            t.observe(false, true);
        }
        assert_eq!(t.ticks(), 30);
        t.observe(false, false);
        assert_eq!(t.ticks(), 30);
    }

    #[test]
    fn state_machine() {
        let mut u = UavState::hovering(LOW, 0.0, Heading::Forward);
        assert!(u.transition(Phase::Done).is_err());
        u.transition(Phase::ChangingAltitude).unwrap();
        assert!(u.transition(Phase::Passing).is_err());
        u.transition(Phase::Hovering).unwrap();
        u.transition(Phase::Passing).unwrap();
        assert!(u.transition(Phase::Hovering).is_err());
        u.transition(Phase::Done).unwrap();
    }
}
