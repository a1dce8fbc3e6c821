use std::path::Path;
use std::process::{Command, Output};

use gridpact::games::{solve_case, Case, CaseOptions};
use gridpact::io::{read_results, toy_scenario, Format, SummaryRow};
use serde_json::Value;

fn gridpact(args: &[&str]) -> Output {
    gridpact_env(args, &[])
}

fn gridpact_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gridpact"));
    cmd.args(args).env_remove("GRIDPACT_SOLVER");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(o: &Output) -> Vec<String> {
    stdout(o).lines().skip(1).map(str::to_string).collect()
}

/// Toy variant where the pinned congestion spend needs more curtailment
/// than any plant can offer.
fn write_infeasible(dir: &Path) -> String {
    let mut doc: Value = serde_json::from_str(gridpact::io::TOY_SCENARIO_JSON).unwrap();
    doc["tech"]["min_load_ratio"] = 0.9.into();
    doc["network"]["residual_capacity"] = serde_json::json!([2.0, 0.1, 2.0]);
    doc["budgets"]["cm_budget"] = 400.0.into();
    doc["budgets"]["theta"] = 0.5.into();
    let path = dir.join("infeasible.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_toy_writes_a_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("game1.csv");
    let o = gridpact(&["solve", "--case", "game1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_results(&out, Format::Csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].case, "game1");
    assert!(rows[0].p_grid.is_some());
}

#[test]
fn solve_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("row.json");
    let o = gridpact(&["solve", "--case", "ely-hpr", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cli = read_results(&out, Format::Json).unwrap().remove(0);
    let bundle = solve_case(&toy_scenario(), Case::ElyHpr, &CaseOptions::default()).unwrap();
    let lib = SummaryRow::from_bundle(&bundle, None);
    assert_eq!(SummaryRow { runtime_s: 0.0, ..cli }, SummaryRow { runtime_s: 0.0, ..lib });
}

#[test]
fn infeasible_scenario_exits_2_with_tags() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write_infeasible(dir.path());
    let o = gridpact(&["solve", "--case", "game2", "--scenario", &sc]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("violated: cm_budget[t=0]"), "{}", stderr(&o));
}

#[test]
fn bad_invocations_exit_1() {
    for args in [
        &["solve", "--case", "game5"][..],
        &["solve", "--case", "game1", "--gap", "0.7"],
        &["solve", "--case", "game1", "--gap", "0"],
        &["solve", "--case", "game1", "--frobnicate"],
        &["solve"],
        &["solve", "--case", "game1", "--scenario", "/no/such/file.json"],
        &["solve", "--case", "game1", "--slice", "2:5"],
        &["sweep", "--axis", "crcplus", "--from", "1", "--to", "5", "--step", "0"],
        &["sweep", "--axis", "lunar-phase", "--values", "1"],
        &["sweep", "--axis", "h2", "--values", "10,5"],
    ] {
        let o = gridpact(args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn help_and_version_exit_0() {
    let o = gridpact(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("Exit codes"));
    assert_eq!(code(&gridpact(&["--version"])), 0);
}

#[test]
fn sweep_range_gives_one_row_per_value() {
    let o = gridpact(&["sweep", "--axis", "crcplus", "--from", "1", "--to", "5", "--step", "1", "--cases", "game2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines = data_lines(&o);
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|l| l.starts_with("game2,crc_plus_price,")));
}

#[test]
fn sweep_values_cover_every_case() {
    let o = gridpact(&["sweep", "--axis", "h2", "--values", "5,10", "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines = data_lines(&o);
    assert_eq!(lines.len(), 8);
    for case in ["game1", "game2", "ely-hpr", "no-hpr"] {
        assert_eq!(lines.iter().filter(|l| l.starts_with(&format!("{case},"))).count(), 2);
    }
}

#[test]
fn sweep_reports_switch_points() {
    let o = gridpact(&[
        "sweep",
        "--axis",
        "h2",
        "--values",
        "0,5,10",
        "--cases",
        "game1",
        "--find-switch",
        "game1:p_grid:positive",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("switch game1:p_grid:positive: h2_price = 5"), "{}", stderr(&o));
}

#[test]
fn oracle_check_on_toy_passes_and_refines() {
    let o = gridpact(&["oracle-check", "--grid-step", "1,0.5,0.25", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines: Vec<Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(lines.len(), 6);
    for case in ["game1", "game2"] {
        let diffs: Vec<f64> = lines
            .iter()
            .filter(|l| l["case"] == case)
            .map(|l| l["abs_diff"].as_f64().unwrap())
            .collect();
        assert_eq!(diffs.len(), 3);
        assert!(diffs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{case}: {diffs:?}");
    }
    assert!(lines.iter().all(|l| l["pass"] == true));
}

#[test]
fn oracle_guard_exits_1_quickly() {
    let o = gridpact(&["oracle-check", "--synthetic"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("limit"), "{}", stderr(&o));
}

#[test]
fn generated_data_validates_with_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("scenario.json");
    let series = dir.path().join("series.csv");
    let o = gridpact(&[
        "gen-data",
        "--hours",
        "48",
        "--seed",
        "7",
        "--out",
        doc.to_str().unwrap(),
        "--series-out",
        series.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let hash = stderr(&o).split_whitespace().last().unwrap().to_string();
    let v = gridpact(&["validate", "--scenario", doc.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&v), 0, "{}", stderr(&v));
    let report: Value = serde_json::from_str(&stdout(&v)).unwrap();
    assert_eq!(report["hours"], 48);
    assert_eq!(report["scenario_hash"], hash.as_str());
}

#[test]
fn backend_precedence() {
    let bad = [("GRIDPACT_SOLVER", "nonexistent")];
    assert_eq!(code(&gridpact_env(&["solve", "--case", "no-hpr"], &bad)), 1);
    assert_eq!(code(&gridpact_env(&["solve", "--case", "no-hpr", "--backend", "bnb"], &bad)), 0);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gridpact.toml");
    std::fs::write(&cfg, "[solver]\nbackend = \"nonexistent\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(code(&gridpact(&["solve", "--case", "no-hpr", "--config", cfg])), 1);
    let env = [("GRIDPACT_SOLVER", "bnb-indicator")];
    assert_eq!(code(&gridpact_env(&["solve", "--case", "no-hpr", "--config", cfg], &env)), 0);
}

#[test]
fn config_gap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gridpact.toml");
    std::fs::write(&cfg, "[solver]\nrel_gap = 0.9\n").unwrap();
    let o = gridpact(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("gap"));
}
