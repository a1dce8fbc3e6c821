//! Browser bindings. Every export takes a scenario as JSON text and returns
//! JSON text; errors become thrown strings on the JavaScript side.

use gridpact::games::{solve_case, Case, CaseOptions};
use gridpact::io::{parse_scenario, SummaryRow, TOY_SCENARIO_JSON};
use gridpact::model::ScenarioData;
use gridpact::oracle::{enumerate_bilevel, grid_slack, GridSpec};
use gridpact::sweep::{range_values, run_sweep, SweepAxis, SweepPlan};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps an accidental big instance from freezing the tab.
const MAX_HOURS: usize = 48;
const TIME_LIMIT_S: f64 = 20.0;

fn scenario(text: &str) -> Result<ScenarioData, String> {
    let sc = parse_scenario(text, None, None).map_err(|e| e.to_string())?;
    if sc.hours() > MAX_HOURS {
        return Err(format!("the demo handles at most {MAX_HOURS} hours, got {}", sc.hours()));
    }
    Ok(sc)
}

fn options() -> CaseOptions {
    CaseOptions { time_limit_s: Some(TIME_LIMIT_S), ..CaseOptions::default() }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Solved {
    status: &'static str,
    summary: SummaryRow,
    /// Hourly dispatch, curtailments and hydrogen.
    hourly: Option<Hourly>,
}

#[derive(Serialize)]
struct Hourly {
    p_e: Vec<f64>,
    s: Vec<f64>,
    s_plus: Vec<f64>,
    /// Curtailment under non-firm agreements.
    r: Vec<f64>,
    h2: Vec<f64>,
    residual: Vec<f64>,
}

pub fn solve_json(scenario_json: &str, case: &str) -> Result<String, String> {
    let sc = scenario(scenario_json)?;
    let case: Case = case.parse().map_err(|e: gridpact::games::GameError| e.to_string())?;
    let b = solve_case(&sc, case, &options()).map_err(|e| e.to_string())?;
    let hourly = b.values.as_ref().map(|v| Hourly {
        p_e: v.p_e.clone(),
        s: v.s.clone(),
        s_plus: v.s_plus.clone(),
        r: v.r2.iter().zip(&v.r3).map(|(a, b)| a + b).collect(),
        h2: v.f.clone(),
        residual: sc.network.residual_capacity.clone(),
    });
    to_json(&Solved { status: b.status.label(), summary: SummaryRow::from_bundle(&b, None), hourly })
}

#[derive(Serialize)]
struct SweepPoint {
    case: &'static str,
    value: f64,
    status: &'static str,
    summary: SummaryRow,
}

pub fn sweep_json(scenario_json: &str, axis: &str, from: f64, to: f64, step: f64) -> Result<String, String> {
    let sc = scenario(scenario_json)?;
    let axis: SweepAxis = axis.parse().map_err(|e: gridpact::sweep::SweepError| e.to_string())?;
    let values = range_values(from, to, step).map_err(|e| e.to_string())?;
    if values.len() > 50 {
        return Err(format!("{} sweep points; the demo allows 50", values.len()));
    }
    let plan = SweepPlan::new(axis, values, Case::ALL.to_vec(), sc, options()).map_err(|e| e.to_string())?;
    let result = run_sweep(&plan, 1).map_err(|e| e.to_string())?;
    let points: Vec<SweepPoint> = result
        .rows
        .iter()
        .map(|r| SweepPoint {
            case: r.case.label(),
            value: r.value,
            status: r.status_label(),
            summary: r.summary(result.axis),
        })
        .collect();
    to_json(&points)
}

#[derive(Serialize)]
struct OracleCheck {
    case: &'static str,
    points: usize,
    oracle: f64,
    oracle_point: Vec<f64>,
    axes: Vec<String>,
    reformulation: Option<f64>,
    tolerance: f64,
    pass: bool,
}

pub fn oracle_json(scenario_json: &str, case: &str, step: f64, ceiling: f64) -> Result<String, String> {
    let sc = scenario(scenario_json)?;
    let case: Case = case.parse().map_err(|e: gridpact::games::GameError| e.to_string())?;
    let grid = GridSpec::new(step, ceiling).map_err(|e| e.to_string())?;
    let oracle = enumerate_bilevel(&sc, case, &grid, 1).map_err(|e| e.to_string())?;
    let reform = solve_case(&sc, case, &options()).map_err(|e| e.to_string())?;
    let reformulation = reform.is_success().then_some(reform.upper_objective);
    let tolerance = (1e-3 * oracle.objective.abs().max(1.0)).max(grid_slack(&sc, case, step));
    let pass = reformulation.is_some_and(|r| (r - oracle.objective).abs() <= tolerance);
    to_json(&OracleCheck {
        case: case.label(),
        points: oracle.outcomes.len(),
        oracle: oracle.objective,
        oracle_point: oracle.best_point,
        axes: oracle.axes,
        reformulation,
        tolerance,
        pass,
    })
}

/// The bundled toy scenario document.
#[wasm_bindgen]
pub fn toy_scenario() -> String {
    TOY_SCENARIO_JSON.to_string()
}

/// Solves one case; `case` is game1, game2, ely-hpr or no-hpr.
#[wasm_bindgen]
pub fn solve(scenario_json: &str, case: &str) -> Result<String, JsError> {
    solve_json(scenario_json, case).map_err(|e| JsError::new(&e))
}

/// Sweeps `axis` (crc-plus, h2, theta) over all four cases.
#[wasm_bindgen]
pub fn sweep(scenario_json: &str, axis: &str, from: f64, to: f64, step: f64) -> Result<String, JsError> {
    sweep_json(scenario_json, axis, from, to, step).map_err(|e| JsError::new(&e))
}

/// Brute-force check of game1 or game2 against the reformulation.
#[wasm_bindgen]
pub fn oracle_check(scenario_json: &str, case: &str, step: f64, ceiling: f64) -> Result<String, JsError> {
    oracle_json(scenario_json, case, step, ceiling).map_err(|e| JsError::new(&e))
}
