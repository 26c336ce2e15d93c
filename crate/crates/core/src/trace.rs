//! Decision traces: time-ordered events plus a run summary, stored as JSON
//! Lines (one event per line, then one `summary` line).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::ActionId;
use crate::learning::BeliefView;
use crate::sim::Phase;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Seconds in the encounter simulator, iteration number in repeated games.
    pub t: f64,
    pub uav: Option<usize>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// The opponent action inferred for `epoch`.
    Observation {
        epoch: u32,
        observed: ActionId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        saw: Option<bool>,
    },
    Decision {
        epoch: u32,
        action: ActionId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        opponent_strategy: Option<Vec<f64>>,
        belief: BeliefView,
    },
    PhaseChange {
        from: Phase,
        to: Phase,
        altitude_m: f64,
        position_m: f64,
    },
    Collision {
        band: ActionId,
        separation_m: f64,
    },
    /// Joint action and shared reward of one decision epoch.
    Outcome {
        epoch: u32,
        actions: Vec<ActionId>,
        reward: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub coordinated: bool,
    pub epochs_to_coordination: Option<u32>,
    /// `None` for repeated games, which have no passing manoeuvre.
    pub passed: Option<bool>,
    pub collision: Option<bool>,
    pub decision_epochs: u32,
    pub total_reward: f64,
    #[serde(default)]
    pub inference_violations: u32,
    #[serde(default)]
    pub regularized_updates: u64,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    kind: &'static str,
    #[serde(flatten)]
    summary: &'a TraceSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTrace {
    pub events: Vec<TraceEvent>,
    pub summary: TraceSummary,
}

impl DecisionTrace {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut out, event)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut out, &SummaryLine { kind: "summary", summary: &self.summary })?;
        out.write_all(b"\n")
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Joint actions per epoch, from the outcome events.
    pub fn joint_decisions(&self) -> Vec<Vec<ActionId>> {
        plot_rows(&self.events).into_iter().map(|r| r.actions).collect()
    }
}

/// A parsed trace file; the summary is absent for empty or truncated files.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub events: Vec<TraceEvent>,
    pub summary: Option<TraceSummary>,
}

/// Reads a JSONL trace, checking that event times never decrease and that
/// nothing follows the summary line.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<ParsedTrace, TraceError> {
    let mut events: Vec<TraceEvent> = Vec::new();
    let mut summary = None;
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| TraceError::Malformed { line: line_no, message };
        if summary.is_some() {
            return Err(bad("content after the summary line".into()));
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if value.get("kind").and_then(|k| k.as_str()) == Some("summary") {
            let mut value = value;
            if let Some(obj) = value.as_object_mut() {
                obj.remove("kind");
            }
            summary = Some(serde_json::from_value(value).map_err(|e| bad(e.to_string()))?);
            continue;
        }
        let event: TraceEvent = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        if let Some(prev) = events.last() {
            if event.t < prev.t {
                return Err(bad(format!("time {} precedes {}", event.t, prev.t)));
            }
        }
        events.push(event);
    }
    Ok(ParsedTrace { events, summary })
}

/// One row of the decision timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub iteration: u32,
    pub actions: Vec<ActionId>,
    pub reward: f64,
}

/// Decision timeline, one row per outcome event in epoch order.
pub fn plot_rows(events: &[TraceEvent]) -> Vec<PlotRow> {
    let mut rows: Vec<PlotRow> = events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::Outcome { epoch, actions, reward } => {
                Some(PlotRow { iteration: *epoch, actions: actions.clone(), reward: *reward })
            }
            _ => None,
        })
        .collect();
    rows.sort_by_key(|r| r.iteration);
    rows
}

/// The observed coordination sequence: both agents pick the same action at
/// first, flip together at least once, then split and complete the pass.
pub fn shows_coordination_motif(trace: &DecisionTrace) -> bool {
    if trace.summary.passed != Some(true) {
        return false;
    }
    let joint = trace.joint_decisions();
    let same = |j: &Vec<ActionId>| j.len() == 2 && j[0] == j[1];
    let (Some(first), Some(last)) = (joint.first(), joint.last()) else {
        return false;
    };
    if !same(first) || same(last) {
        return false;
    }
    joint.windows(2).any(|w| same(&w[0]) && same(&w[1]) && w[0][0] != w[1][0])
}
