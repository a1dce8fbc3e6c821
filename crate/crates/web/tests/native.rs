use gridpact_web::{oracle_json, solve_json, sweep_json, toy_scenario};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.expect("call succeeds")).expect("valid json")
}

#[test]
fn solve_returns_summary_and_hourly_series() {
    let v = parse(solve_json(&toy_scenario(), "game1"));
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["summary"]["case"], "game1");
    assert_eq!(v["hourly"]["p_e"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_covers_all_cases() {
    let v = parse(sweep_json(&toy_scenario(), "crc-plus", 1.0, 3.0, 1.0));
    assert_eq!(v.as_array().unwrap().len(), 12);
}

#[test]
fn oracle_check_agrees_on_the_toy() {
    let v = parse(oracle_json(&toy_scenario(), "game1", 0.5, 2.0));
    assert_eq!(v["pass"], true);
    assert_eq!(v["points"], 125);
}

#[test]
fn bad_inputs_are_errors_not_panics() {
    assert!(solve_json("{", "game1").is_err());
    assert!(solve_json(&toy_scenario(), "game9").is_err());
    assert!(sweep_json(&toy_scenario(), "crc-plus", 1.0, 100.0, 1.0).is_err());
    assert!(oracle_json(&toy_scenario(), "ely-hpr", 0.5, 2.0).is_err());
}
