use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::Path;

use fpcoord_core::trace::{plot_rows, read_jsonl, PlotRow, TraceError, TraceEvent};

use crate::error::Failure;

pub const TIMELINE_HEADER: [&str; 4] = ["iteration", "uav1_action", "uav2_action", "reward"];

/// Writes the decision timeline as CSV. Actions are band indices (0 = High,
/// 1 = Low). The header is written even when there are no rows.
pub fn write_timeline<W: Write>(events: &[TraceEvent], out: W) -> Result<(), Failure> {
    let rows = plot_rows(events);
    if let Some(bad) = rows.iter().find(|r| r.actions.len() != 2) {
        return Err(Failure::Invalid(format!(
            "epoch {} has {} actions, expected 2",
            bad.iteration,
            bad.actions.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMELINE_HEADER)?;
    for PlotRow { iteration, actions, reward } in rows {
        w.write_record([
            iteration.to_string(),
            actions[0].index().to_string(),
            actions[1].index().to_string(),
            reward.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Failure::Io(e.to_string()))
}

pub fn cmd_plotdata(trace_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let file = File::open(trace_path).map_err(|e| Failure::io(trace_path, e))?;
    let parsed = read_jsonl(BufReader::new(file)).map_err(|e| match e {
        TraceError::Malformed { .. } => Failure::Invalid(format!("{}: {e}", trace_path.display())),
        TraceError::Io(io) => Failure::io(trace_path, io),
    })?;
    log::info!("{}: {} events", trace_path.display(), parsed.events.len());
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::io(path, e))?;
            write_timeline(&parsed.events, file)
        }
        None => write_timeline(&parsed.events, io::stdout().lock()),
    }
}
