use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fpcoord_core::learning::RepeatedGameConfig;
use fpcoord_core::sim::{run_encounter, EncounterConfig};
use fpcoord_core::trace::{DecisionTrace, TraceSummary};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Failure;
use crate::plot::write_timeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Encounter,
    RepeatedGame,
    Batch,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Encounter => "encounter",
            Mode::RepeatedGame => "repeated_game",
            Mode::Batch => "batch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub mode: Mode,
    pub config_path: Option<PathBuf>,
    /// `None` runs the seed stored in the config.
    pub seeds: Option<Vec<u64>>,
    pub output_dir: PathBuf,
    pub output_format: Format,
}

/// One row of `summary.csv`. Options serialize as empty cells.
#[derive(Debug, Serialize)]
struct SummaryRow {
    seed: u64,
    coordinated: bool,
    epochs_to_coordination: Option<u32>,
    passed: Option<bool>,
    collision: Option<bool>,
}

enum Experiment {
    Encounter(EncounterConfig),
    Repeated(RepeatedGameConfig),
}

impl Experiment {
    fn default_seed(&self) -> u64 {
        match self {
            Experiment::Encounter(c) => c.seed,
            Experiment::Repeated(c) => c.seed,
        }
    }

    fn run(&self, seed: u64) -> Result<DecisionTrace, String> {
        match self {
            Experiment::Encounter(c) => {
                let cfg = EncounterConfig { seed, ..c.clone() };
                run_encounter(&cfg, &cfg.learners).map_err(|e| e.to_string())
            }
            Experiment::Repeated(c) => c.run(seed).map_err(|e| e.to_string()),
        }
    }
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    // serde_json reports "at line L column C", which names the offending field.
    serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn load_experiment(spec: &RunSpec) -> Result<Experiment, Failure> {
    let path = spec.config_path.as_deref();
    let label = path.map_or_else(|| "<default config>".to_string(), |p| p.display().to_string());
    Ok(match spec.mode {
        Mode::Encounter | Mode::Batch => {
            let cfg: EncounterConfig = load(path)?;
            cfg.validate().map_err(|e| Failure::Invalid(format!("{label}: {e}")))?;
            Experiment::Encounter(cfg)
        }
        Mode::RepeatedGame => {
            let cfg: RepeatedGameConfig = load(path)?;
            cfg.validate().map_err(|e| Failure::Invalid(format!("{label}: {e}")))?;
            Experiment::Repeated(cfg)
        }
    })
}

fn write_trace(trace: &DecisionTrace, path: &Path, format: Format) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Jsonl => trace.write_jsonl(&mut out).map_err(|e| Failure::io(path, e))?,
        Format::Csv => write_timeline(&trace.events, &mut out)?,
    }
    out.flush().map_err(|e| Failure::io(path, e))
}

/// Runs every seed, writes one trace file per seed and then `summary.csv`,
/// sorted by seed. Returns the summaries in that order.
pub fn cmd_run(spec: &RunSpec) -> Result<Vec<(u64, TraceSummary)>, Failure> {
    let experiment = load_experiment(spec)?;
    let seeds = match (&spec.seeds, spec.mode) {
        (Some(s), _) if s.is_empty() => return Err(Failure::Invalid("--seeds: no seeds given".into())),
        (Some(s), _) => s.clone(),
        (None, Mode::Batch) => return Err(Failure::Invalid("--seeds: batch mode needs seeds".into())),
        (None, _) => vec![experiment.default_seed()],
    };
    fs::create_dir_all(&spec.output_dir).map_err(|e| Failure::io(&spec.output_dir, e))?;
    let ext = match spec.output_format {
        Format::Jsonl => "jsonl",
        Format::Csv => "csv",
    };

    let mut results: Vec<(u64, TraceSummary)> = seeds
        .par_iter()
        .map(|&seed| {
            let trace = experiment
                .run(seed)
                .map_err(|e| Failure::Invalid(format!("seed {seed}: {e}")))?;
            let path = spec.output_dir.join(format!("{}_{seed}.{ext}", spec.mode.name()));
            write_trace(&trace, &path, spec.output_format)?;
            log::debug!("seed {seed}: {:?}", trace.summary);
            Ok((seed, trace.summary))
        })
        .collect::<Result<_, Failure>>()?;
    results.sort_by_key(|(seed, _)| *seed);

    let summary_path = spec.output_dir.join("summary.csv");
    let file = File::create(&summary_path).map_err(|e| Failure::io(&summary_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for (seed, s) in &results {
        w.serialize(SummaryRow {
            seed: *seed,
            coordinated: s.coordinated,
            epochs_to_coordination: s.epochs_to_coordination,
            passed: s.passed,
            collision: s.collision,
        })?;
    }
    w.flush().map_err(|e| Failure::io(&summary_path, e))?;
    log::info!("wrote {} runs to {}", results.len(), spec.output_dir.display());
    Ok(results)
}
