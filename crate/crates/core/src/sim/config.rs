use serde::{Deserialize, Serialize};

use super::uav::LOW;
use super::SimError;
use crate::game::ActionId;
use crate::learning::LearnerSpec;

const DIVISIBILITY_TOLERANCE: f64 = 1e-9;

/// Encounter parameters. Durations are in seconds, distances in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncounterConfig {
    pub tick_seconds: f64,
    pub epoch_seconds: f64,
    pub absence_seconds: f64,
    pub altitude_separation_m: f64,
    pub corridor_length_m: f64,
    pub pass_speed_mps: f64,
    pub altitude_change_seconds: f64,
    pub collision_radius_m: f64,
    pub max_epochs: u32,
    pub seed: u64,
    pub num_bands: usize,
    /// Reward shared by the two UAVs when their bands differ.
    pub reward: f64,
    pub initial_bands: [ActionId; 2],
    /// Delay before each UAV's first decision.
    pub epoch_offset_seconds: [f64; 2],
    pub learners: [LearnerSpec; 2],
}

impl Default for EncounterConfig {
    fn default() -> Self {
        Self {
            tick_seconds: 0.1,
            epoch_seconds: 8.0,
            absence_seconds: 4.0,
            altitude_separation_m: 1.0,
            corridor_length_m: 10.0,
            pass_speed_mps: 1.0,
            altitude_change_seconds: 2.0,
            collision_radius_m: 0.5,
            max_epochs: 30,
            seed: 0,
            num_bands: 2,
            reward: 1.0,
            initial_bands: [LOW, LOW],
            epoch_offset_seconds: [0.0, 0.0],
            learners: [LearnerSpec::default(), LearnerSpec::default()],
        }
    }
}

/// Durations converted to whole ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickTiming {
    pub epoch: u64,
    pub absence: u64,
    pub altitude_change: u64,
    pub offsets: [u64; 2],
}

fn invalid(field: &'static str, message: impl Into<String>) -> SimError {
    SimError::InvalidConfig { field, message: message.into() }
}

fn whole_ticks(field: &'static str, value: f64, tick: f64) -> Result<u64, SimError> {
    let ratio = value / tick;
    let rounded = ratio.round();
    if (ratio - rounded).abs() > DIVISIBILITY_TOLERANCE * ratio.abs().max(1.0) {
        return Err(invalid(field, format!("{value} is not a multiple of tick_seconds {tick}")));
    }
    Ok(rounded as u64)
}

impl EncounterConfig {
    pub fn validate(&self) -> Result<TickTiming, SimError> {
        let positive = [
            ("tick_seconds", self.tick_seconds),
            ("epoch_seconds", self.epoch_seconds),
            ("absence_seconds", self.absence_seconds),
            ("altitude_separation_m", self.altitude_separation_m),
            ("corridor_length_m", self.corridor_length_m),
            ("pass_speed_mps", self.pass_speed_mps),
            ("altitude_change_seconds", self.altitude_change_seconds),
            ("collision_radius_m", self.collision_radius_m),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(field, format!("must be positive and finite, got {value}")));
            }
        }
        if !self.reward.is_finite() || self.reward <= 0.0 {
            return Err(invalid("reward", "must be positive and finite"));
        }
        if self.absence_seconds >= self.epoch_seconds {
            return Err(invalid("absence_seconds", "must be less than epoch_seconds"));
        }
        if self.max_epochs == 0 {
            return Err(invalid("max_epochs", "must be >= 1"));
        }
        if self.num_bands != 2 {
            return Err(invalid("num_bands", "opponent inference needs exactly 2 bands"));
        }
        for band in self.initial_bands {
            if band.index() >= self.num_bands {
                return Err(invalid("initial_bands", format!("band {} out of range", band.index())));
            }
        }
        let tick = self.tick_seconds;
        let epoch = whole_ticks("epoch_seconds", self.epoch_seconds, tick)?;
        let absence = whole_ticks("absence_seconds", self.absence_seconds, tick)?;
        let altitude_change = whole_ticks("altitude_change_seconds", self.altitude_change_seconds, tick)?;
        let mut offsets = [0; 2];
        for (i, &off) in self.epoch_offset_seconds.iter().enumerate() {
            if !(off.is_finite() && off >= 0.0 && off < self.epoch_seconds) {
                return Err(invalid("epoch_offset_seconds", "must lie in [0, epoch_seconds)"));
            }
            offsets[i] = whole_ticks("epoch_offset_seconds", off, tick)?;
        }
        for (p, spec) in self.learners.iter().enumerate() {
            spec.validate(self.num_bands, self.num_bands).map_err(|e| {
                invalid(if p == 0 { "learners[0]" } else { "learners[1]" }, e.to_string())
            })?;
        }
        Ok(TickTiming { epoch, absence, altitude_change, offsets })
    }

    /// Height of a band above the lowest one. Band 0 is the highest.
    pub fn band_altitude(&self, band: ActionId) -> f64 {
        (self.num_bands - 1 - band.index()) as f64 * self.altitude_separation_m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let t = EncounterConfig::default().validate().unwrap();
        assert_eq!(t, TickTiming { epoch: 80, absence: 40, altitude_change: 20, offsets: [0, 0] });
    }

    #[test]
    fn absence_must_be_shorter_than_epoch() {
        let cfg = EncounterConfig { absence_seconds: 8.0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig { field: "absence_seconds", .. })));
    }

    #[test]
    fn tick_must_divide_durations() {
        let cfg = EncounterConfig { tick_seconds: 0.3, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig { field: "epoch_seconds", .. })));
        let cfg = EncounterConfig { tick_seconds: 0.25, ..Default::default() };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn parses_partial_documents() {
        let cfg: EncounterConfig =
            serde_json::from_str(r#"{"max_epochs": 5, "learners": [{"type":"fixed","action":0},{"type":"fixed","action":1}]}"#)
                .unwrap();
        assert_eq!(cfg.max_epochs, 5);
        assert_eq!(cfg.epoch_seconds, 8.0);
        assert!(serde_json::from_str::<EncounterConfig>(r#"{"epoch_secs": 5}"#).is_err());
    }

    #[test]
    fn band_altitudes() {
        let cfg = EncounterConfig::default();
        assert_eq!(cfg.band_altitude(ActionId(0)), 1.0);
        assert_eq!(cfg.band_altitude(ActionId(1)), 0.0);
    }
}
