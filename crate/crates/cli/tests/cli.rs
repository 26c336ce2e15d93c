use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpcoord_core::game::make_tcas_game;
use fpcoord_core::learning::run_repeated_game;
use fpcoord_core::sim::EncounterConfig;
use tempfile::TempDir;

fn fpcoord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpcoord")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = fpcoord(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn batch_1_to_100(dir: &TempDir) -> Vec<Vec<String>> {
    let out = dir.path().join("batch");
    run_ok(&["run", "--mode", "batch", "--seeds", "1..100", "--out", s(&out)]);
    let (header, rows) = read_csv(&out.join("summary.csv"));
    assert_eq!(header, ["seed", "coordinated", "epochs_to_coordination", "passed", "collision"]);
    assert_eq!(rows.len(), 100);
    for seed in 1..=100 {
        assert!(out.join(format!("batch_{seed}.jsonl")).is_file());
    }
    rows
}

/// The encounter ends its decision loop at the first split, so the pass/fail
/// column must equal "the repeated game with the same learners and seed splits
/// within max_epochs".
#[test]
fn batch_summary_matches_the_repeated_game_oracle() {
    let dir = TempDir::new().unwrap();
    let rows = batch_1_to_100(&dir);
    let cfg = EncounterConfig::default();
    let game = make_tcas_game(2, 1.0).unwrap();
    for row in &rows {
        let seed: u64 = row[0].parse().unwrap();
        let rg = run_repeated_game(&game, &cfg.learners, cfg.max_epochs, seed).unwrap();
        let split = rg.joint_decisions().iter().any(|j| j[0] != j[1]);
        assert_eq!(row[3], split.to_string(), "seed {seed}");
        assert_eq!(row[4], "false", "seed {seed}");
    }
}

#[test]
fn batch_over_100_seeds_meets_the_pass_rate() {
    let dir = TempDir::new().unwrap();
    let passed = batch_1_to_100(&dir).iter().filter(|r| r[3] == "true").count();
    assert!(passed >= 95, "passed={passed} of 100, need at least 95");
}

#[test]
fn fixed_high_low_encounter_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "fixed.json",
        r#"{"learners": [{"type": "fixed", "action": 0}, {"type": "fixed", "action": 1}]}"#,
    );
    let out = dir.path().join("out");
    run_ok(&["run", "--mode", "encounter", "--config", s(&cfg), "--out", s(&out)]);
    let (_, rows) = read_csv(&out.join("summary.csv"));
    assert_eq!(rows, vec![vec!["0", "true", "1", "true", "false"]]);
    assert!(out.join("encounter_0.jsonl").is_file());
}

#[test]
fn classic_fp_with_identical_init_never_earns_reward() {
    let dir = TempDir::new().unwrap();
    let fp = r#"{"type": "fp", "kappa0": [1.0, 1.0], "tie_break": "first"}"#;
    let cfg = write(dir.path(), "fp.json", &format!(r#"{{"learners": [{fp}, {fp}], "iterations": 40}}"#));
    let out = dir.path().join("out");
    run_ok(&["run", "--mode", "repeated_game", "--config", s(&cfg), "--seeds", "1,2,3", "--out", s(&out)]);
    let (_, summary) = read_csv(&out.join("summary.csv"));
    assert_eq!(summary.len(), 3);
    for row in &summary {
        assert_eq!(&row[1..], ["false", "", "", ""]);
        let trace = out.join(format!("repeated_game_{}.jsonl", row[0]));
        let plot = dir.path().join(format!("plot_{}.csv", row[0]));
        run_ok(&["plotdata", s(&trace), "--out", s(&plot)]);
        let (_, rows) = read_csv(&plot);
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() == 0.0 && r[1] == r[2]));
    }
}

#[test]
fn csv_format_writes_timelines() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    run_ok(&["run", "--mode", "encounter", "--seeds", "5", "--format", "csv", "--out", s(&out)]);
    let (header, rows) = read_csv(&out.join("encounter_5.csv"));
    assert_eq!(header, ["iteration", "uav1_action", "uav2_action", "reward"]);
    assert!(!rows.is_empty());
}

/// Builds a JSONL trace by hand: same band for two epochs, then a split.
fn hand_trace(split_from: u32, epochs: u32) -> String {
    let mut text = String::new();
    for e in 1..=epochs {
        let (a, b) = if e >= split_from { (1, 0) } else { (1, 1) };
        let reward = if a != b { 1.0 } else { 0.0 };
        text.push_str(&format!(
            "{{\"t\":{e}.0,\"uav\":null,\"kind\":\"outcome\",\"epoch\":{e},\"actions\":[{a},{b}],\"reward\":{reward}}}\n"
        ));
    }
    text
}

#[test]
fn plotdata_projects_epochs() {
    let dir = TempDir::new().unwrap();
    let trace = write(dir.path(), "t.jsonl", &hand_trace(3, 5));
    let out = run_ok(&["plotdata", s(&trace)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (k + 1).to_string());
        let split = k + 1 >= 3;
        assert_eq!(row[1] != row[2], split);
        assert_eq!(row[3].parse::<f64>().unwrap(), if split { 1.0 } else { 0.0 });
    }
}

#[test]
fn plotdata_on_empty_trace_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let trace = write(dir.path(), "empty.jsonl", "");
    let out = run_ok(&["plotdata", s(&trace)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "iteration,uav1_action,uav2_action,reward\n");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");

    let bad_field = write(dir.path(), "bad.json", "{\n  \"epoch_seconds\": 8,\n  \"bogus\": 1\n}\n");
    let r = fpcoord(&["run", "--mode", "encounter", "--config", s(&bad_field), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("bogus") && err.contains("line 3"), "{err}");

    let invalid = write(dir.path(), "invalid.json", r#"{"absence_seconds": 9}"#);
    let r = fpcoord(&["run", "--mode", "batch", "--config", s(&invalid), "--seeds", "1..2", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("absence_seconds"));

    let r = fpcoord(&["run", "--mode", "batch", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1), "batch without seeds");

    let r = fpcoord(&["run", "--mode", "encounter", "--config", s(&dir.path().join("nope.json")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));

    let blocker = write(dir.path(), "file", "");
    let r = fpcoord(&["run", "--mode", "encounter", "--out", s(&blocker.join("sub"))]);
    assert_eq!(r.status.code(), Some(2), "output dir under a regular file");

    let malformed = write(dir.path(), "m.jsonl", "{\"t\": 1\n");
    assert_eq!(fpcoord(&["plotdata", s(&malformed)]).status.code(), Some(1));
    assert_eq!(fpcoord(&["plotdata", s(&dir.path().join("absent.jsonl"))]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&["run", "--mode", "batch", "--seeds", "1..20", "--out", s(out)]);
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 21);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

/// Every trace the run command writes converts cleanly.
#[test]
fn run_then_plotdata_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    run_ok(&["run", "--mode", "batch", "--seeds", "1..10", "--out", s(&out)]);
    for seed in 1..=10 {
        let trace = out.join(format!("batch_{seed}.jsonl"));
        let plot = run_ok(&["plotdata", s(&trace)]);
        let rows = String::from_utf8(plot.stdout).unwrap().lines().count() - 1;
        let text = fs::read_to_string(&trace).unwrap();
        let epochs = text.lines().filter(|l| l.contains("\"kind\":\"outcome\"")).count();
        assert_eq!(rows, epochs, "seed {seed}");
    }
}
