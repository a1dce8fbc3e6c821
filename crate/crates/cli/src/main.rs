mod args;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use gridpact::bilevel::Linearization;
use gridpact::games::{default_dual_bound, solve_case, Case, CaseOptions};
use gridpact::io::{
    generate_synthetic, load_scenario, parse_scenario, read_series, toy_scenario, write_rows, write_series, Format,
    SeriesRow, SummaryRow, SyntheticSpec, TOY_SCENARIO_JSON,
};
use gridpact::lp::SolveStatus;
use gridpact::model::{validate_scenario, BudgetMode, ContractKind, ScenarioData};
use gridpact::oracle::{enumerate_bilevel, grid_size, grid_slack, GridSpec, OracleError};
use gridpact::sweep::{find_switch, range_values, run_sweep, scenario_hash, write_tidy, Layout, SweepAxis, SweepPlan};
use serde::Serialize;

use args::{BudgetModeArg, CaseArg, Cli, Command, Common, LayoutArg, LinearizationArg, OutFormat};
use config::{Config, Layers, Resolved};

const OK: u8 = 0;
const FAILURE: u8 = 1;
const INFEASIBLE: u8 = 2;
const LIMIT: u8 = 3;

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { FAILURE } else { OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(FAILURE)
        }
    }
}

fn run(cli: Cli) -> Fallible<u8> {
    let config = match &cli.common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let jobs_flag = match &cli.command {
        Command::Sweep { jobs, .. } | Command::OracleCheck { jobs, .. } => *jobs,
        _ => None,
    };
    let settings = config::resolve(Layers {
        backend_flag: cli.common.backend.as_deref(),
        backend_env: std::env::var("GRIDPACT_SOLVER").ok(),
        gap_flag: cli.common.gap,
        time_limit_flag: cli.common.time_limit,
        jobs_flag,
        config: &config,
    })?;
    let c = &cli.common;
    match &cli.command {
        Command::Solve { case, linearization, big_m, no_strong_duality } => {
            let sc = scenario(c)?;
            let mut opts = case_options(&settings);
            opts.strong_duality = !no_strong_duality;
            opts.linearization = match linearization {
                LinearizationArg::Sos1 => Linearization::Sos1,
                LinearizationArg::Bigm => Linearization::BigM(big_m.unwrap_or_else(|| default_dual_bound(&sc))),
            };
            cmd_solve(c, &sc, to_case(*case), &opts)
        }
        Command::Sweep { axis, from, to, step, values, cases, layout, find_switch, .. } => {
            let sc = scenario(c)?;
            let values = match (values, from, to, step) {
                (Some(v), _, _, _) => v.clone(),
                (None, Some(f), Some(t), Some(s)) => range_values(*f, *t, *s)?,
                _ => return Err("give either --values or all of --from, --to and --step".into()),
            };
            let axis: SweepAxis = axis.parse()?;
            let cases: Vec<Case> = cases.iter().map(|&k| to_case(k)).collect();
            let mut plan = SweepPlan::new(axis, values, cases, sc, case_options(&settings))?;
            if c.synthetic {
                plan = plan.with_seed(c.seed.unwrap_or(1));
            }
            cmd_sweep(c, &plan, settings.jobs, *layout, find_switch)
        }
        Command::OracleCheck { grid_step, ceiling, cases, report, .. } => {
            let sc = scenario(c)?;
            let cases: Vec<Case> = cases.iter().map(|&k| to_case(k)).collect();
            cmd_oracle_check(c, &sc, &settings, &cases, grid_step, *ceiling, report.as_deref())
        }
        Command::GenData {
            hours,
            peak,
            depth,
            congestion_hours,
            start_hour,
            price_level,
            price_volatility,
            demand,
            series_out,
        } => {
            let spec = SyntheticSpec {
                hours: *hours,
                peak_mw: *peak,
                congestion_depth: *depth,
                congestion_hours_per_day: *congestion_hours,
                congestion_start_hour: *start_hour,
                price_level: *price_level,
                price_volatility: *price_volatility,
                demand_cap: *demand,
                seed: c.seed.unwrap_or(1),
            };
            cmd_gen_data(c, &spec, series_out.as_deref())
        }
        Command::Validate => cmd_validate(c),
    }
}

fn to_case(c: CaseArg) -> Case {
    match c {
        CaseArg::Game1 => Case::Game1,
        CaseArg::Game2 => Case::Game2,
        CaseArg::ElyHpr => Case::ElyHpr,
        CaseArg::NoHpr => Case::NoHpr,
    }
}

fn case_options(s: &Resolved) -> CaseOptions {
    CaseOptions {
        backend: s.backend.clone(),
        rel_gap: s.rel_gap,
        time_limit_s: Some(s.time_limit_s),
        node_limit: s.node_limit,
        ..CaseOptions::default()
    }
}

/// Scenario from the common flags: a file, the synthetic year or the toy,
/// then series override, budget mode and slice.
fn scenario(c: &Common) -> Fallible<ScenarioData> {
    let series = |p: &Path| -> Fallible<Vec<SeriesRow>> {
        let f = File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
        Ok(read_series(f)?)
    };
    let mut sc = if c.synthetic {
        if c.series.is_some() {
            return Err("--series cannot be combined with --synthetic".into());
        }
        generate_synthetic(&SyntheticSpec { seed: c.seed.unwrap_or(1), ..SyntheticSpec::default() })?
    } else {
        match (&c.scenario, &c.series) {
            (Some(doc), s) => load_scenario(doc, s.as_deref())?,
            (None, Some(s)) => parse_scenario(TOY_SCENARIO_JSON, None, Some(series(s)?))?,
            (None, None) => toy_scenario(),
        }
    };
    if let Some(mode) = c.budget_mode {
        sc.budgets.mode = match mode {
            BudgetModeArg::PinCrc => BudgetMode::PinCrc,
            BudgetModeArg::PinCrcPlus => BudgetMode::PinCrcPlus,
        };
        sc = validate_scenario(sc)?;
    }
    if let Some((start, len)) = c.slice {
        sc = sc.slice(start, len)?;
    }
    Ok(sc)
}

fn out_format(c: &Common) -> Format {
    match c.format {
        Some(OutFormat::Json) => Format::Json,
        Some(OutFormat::Csv) => Format::Csv,
        None => match c.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        },
    }
}

/// The `--out` file, or stdout.
fn output(c: &Common) -> Fallible<Box<dyn Write>> {
    Ok(match &c.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn exit_for(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal | SolveStatus::GapOptimal => OK,
        SolveStatus::Infeasible => INFEASIBLE,
        SolveStatus::Limit => LIMIT,
        SolveStatus::Unbounded => FAILURE,
    }
}

fn cmd_solve(c: &Common, sc: &ScenarioData, case: Case, opts: &CaseOptions) -> Fallible<u8> {
    let bundle = solve_case(sc, case, opts)?;
    eprintln!(
        "{case}: {} in {:.2}s, {} nodes, gap {:.2e}",
        bundle.status.label(),
        bundle.runtime_s,
        bundle.nodes,
        bundle.gap
    );
    if bundle.status == SolveStatus::Infeasible {
        if bundle.diagnosis.is_empty() {
            eprintln!("no relaxation diagnosis available");
        }
        for (tag, amount) in &bundle.diagnosis {
            eprintln!("violated: {tag} (needs {amount:.6})");
        }
    }
    let row = SummaryRow::from_bundle(&bundle, None);
    let mut out = output(c)?;
    write_rows(&[row], &mut out, out_format(c))?;
    out.flush()?;
    Ok(exit_for(bundle.status))
}

fn cmd_sweep(c: &Common, plan: &SweepPlan, jobs: usize, layout: LayoutArg, switches: &[String]) -> Fallible<u8> {
    // Specs are checked before the (possibly long) sweep starts.
    let mut parsed = Vec::new();
    for s in switches {
        let parts: Vec<&str> = s.splitn(3, ':').collect();
        let [case, field, pred] = parts[..] else {
            return Err(format!("--find-switch expects CASE:FIELD:PRED, got `{s}`").into());
        };
        parsed.push((case.parse::<Case>()?, field.to_string(), pred.parse()?, s.clone()));
    }
    let result = run_sweep(plan, jobs)?;
    let failed = result.rows.iter().filter(|r| !r.succeeded()).count();
    if failed > 0 {
        eprintln!("{failed} of {} points did not solve to optimality", result.rows.len());
    }
    let mut out = output(c)?;
    match (out_format(c), layout) {
        (Format::Json, _) => {
            let rows: Vec<SummaryRow> = result.rows.iter().map(|r| r.summary(result.axis)).collect();
            write_rows(&rows, &mut out, Format::Json)?;
        }
        (Format::Csv, LayoutArg::Tidy) => write_tidy(&result, &mut out, Layout::Tidy)?,
        (Format::Csv, LayoutArg::Gnuplot) => write_tidy(&result, &mut out, Layout::Gnuplot)?,
    }
    out.flush()?;
    for (case, field, pred, spec) in parsed {
        match find_switch(&result, case, &field, pred)? {
            Some(v) => eprintln!("switch {spec}: {} = {v}", result.axis),
            None => eprintln!("switch {spec}: not found"),
        }
    }
    Ok(OK)
}

#[derive(Serialize)]
struct OracleLine {
    case: String,
    grid_step: f64,
    points: usize,
    oracle_objective: Option<f64>,
    reformulation_objective: Option<f64>,
    reformulation_status: String,
    abs_diff: Option<f64>,
    tolerance: f64,
    pass: bool,
}

fn cmd_oracle_check(
    c: &Common,
    sc: &ScenarioData,
    settings: &Resolved,
    cases: &[Case],
    steps: &[f64],
    ceiling: f64,
    report: Option<&Path>,
) -> Fallible<u8> {
    let opts = case_options(settings);
    // Guard first: an oversized grid must fail before any solve starts.
    for &case in cases {
        for &step in steps {
            grid_size(sc, case, &GridSpec::new(step, ceiling)?)?;
        }
    }
    let mut lines = Vec::new();
    for &case in cases {
        let reform = solve_case(sc, case, &opts)?;
        let ref_obj = reform.is_success().then_some(reform.upper_objective);
        for (i, &step) in steps.iter().enumerate() {
            let grid = GridSpec::new(step, ceiling)?;
            let (oracle_obj, points) = match enumerate_bilevel(sc, case, &grid, settings.jobs) {
                Ok(r) => {
                    if i + 1 == steps.len() {
                        if let Some(p) = report {
                            let path = per_case_path(p, case, cases.len());
                            let f = File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                            r.write_report(BufWriter::new(f))?;
                        }
                    }
                    (Some(r.objective), r.outcomes.len())
                }
                Err(OracleError::NoFeasiblePoint) => (None, 0),
                Err(e) => return Err(e.into()),
            };
            let tolerance = 1e-3 * oracle_obj.map_or(1.0, |o| o.abs().max(1.0));
            let tolerance = tolerance.max(grid_slack(sc, case, step));
            let abs_diff = oracle_obj.zip(ref_obj).map(|(o, r)| (o - r).abs());
            let pass = match (oracle_obj, ref_obj) {
                (Some(_), Some(_)) => abs_diff.is_some_and(|d| d <= tolerance),
                (None, None) => reform.status == SolveStatus::Infeasible,
                _ => false,
            };
            lines.push(OracleLine {
                case: case.label().to_string(),
                grid_step: step,
                points,
                oracle_objective: oracle_obj,
                reformulation_objective: ref_obj,
                reformulation_status: reform.status.label().to_string(),
                abs_diff,
                tolerance,
                pass,
            });
        }
    }
    let mut out = output(c)?;
    match out_format(c) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &lines)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let show = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
            writeln!(out, "case,grid_step,points,oracle,reformulation,status,abs_diff,tolerance,result")?;
            for l in &lines {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{:.6},{}",
                    l.case,
                    l.grid_step,
                    l.points,
                    show(l.oracle_objective),
                    show(l.reformulation_objective),
                    l.reformulation_status,
                    show(l.abs_diff),
                    l.tolerance,
                    if l.pass { "pass" } else { "FAIL" }
                )?;
            }
        }
    }
    out.flush()?;
    Ok(if lines.iter().all(|l| l.pass) { OK } else { FAILURE })
}

fn per_case_path(base: &Path, case: Case, n_cases: usize) -> PathBuf {
    if n_cases == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("oracle");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}-{}.{ext}", case.label()))
}

fn cmd_gen_data(c: &Common, spec: &SyntheticSpec, series_out: Option<&Path>) -> Fallible<u8> {
    let mut sc = generate_synthetic(spec)?;
    if let Some((start, len)) = c.slice {
        sc = sc.slice(start, len)?;
    }
    let mut doc = serde_json::to_value(&sc)?;
    if let Some(path) = series_out {
        let rows: Vec<SeriesRow> = (0..sc.hours())
            .map(|t| SeriesRow {
                hour: t,
                residual_capacity_mw: sc.network.residual_capacity[t],
                price_eur_mwh: sc.prices.electricity[t],
                h2_demand_kg: sc.network.h2_offtake[t],
            })
            .collect();
        let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        write_series(&rows, BufWriter::new(f))?;
        // The document links to the series instead of repeating it.
        let obj = doc.as_object_mut().expect("scenario serializes to an object");
        obj.remove("horizon");
        obj["prices"].as_object_mut().expect("prices object").remove("electricity");
        let net = obj["network"].as_object_mut().expect("network object");
        net.remove("residual_capacity");
        net.remove("h2_offtake");
        obj.insert("series_csv".into(), serde_json::Value::String(series_link(c.out.as_deref(), path)?));
    }
    let mut out = output(c)?;
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    out.flush()?;
    eprintln!("{} hours, scenario hash {}", sc.hours(), scenario_hash(&sc));
    Ok(OK)
}

/// Path of the series file as written into the scenario document: relative
/// when both files share a directory, absolute otherwise.
fn series_link(doc: Option<&Path>, series: &Path) -> Fallible<String> {
    let dir_of = |p: &Path| p.parent().map(Path::to_path_buf).unwrap_or_default();
    let same_dir = doc.is_some_and(|d| dir_of(d) == dir_of(series));
    let link = if same_dir {
        PathBuf::from(series.file_name().ok_or("series path has no file name")?)
    } else {
        std::path::absolute(series)?
    };
    Ok(link.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct ScenarioReport {
    hours: usize,
    annual_scale: f64,
    c_el_eur_per_mw: f64,
    tariffs_eur_per_mw: [f64; 3],
    h2_yield_kg_per_mwh: f64,
    min_load_ratio: f64,
    peak_residual_mw: f64,
    min_residual_mw: f64,
    big_m: f64,
    budget_mode: &'static str,
    hourly_cm_spend: f64,
    scenario_hash: String,
}

fn cmd_validate(c: &Common) -> Fallible<u8> {
    let sc = scenario(c)?;
    let res = &sc.network.residual_capacity;
    let report = ScenarioReport {
        hours: sc.hours(),
        annual_scale: sc.annual_scale(),
        c_el_eur_per_mw: sc.scaled_c_el(),
        tariffs_eur_per_mw: [ContractKind::Fa, ContractKind::Nfa85, ContractKind::Nfa].map(|k| sc.scaled_tariff(k)),
        h2_yield_kg_per_mwh: sc.tech.h2_yield,
        min_load_ratio: sc.tech.min_load_ratio,
        peak_residual_mw: sc.network.max_residual(),
        min_residual_mw: res.iter().copied().fold(f64::INFINITY, f64::min),
        big_m: sc.big_m(),
        budget_mode: sc.budgets.mode.label(),
        hourly_cm_spend: sc.budgets.hourly_spend(),
        scenario_hash: scenario_hash(&sc),
    };
    let mut out = output(c)?;
    match out_format(c) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let v = serde_json::to_value(&report)?;
            writeln!(out, "key,value")?;
            for (k, v) in v.as_object().expect("report is an object") {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                writeln!(out, "{k},{s}")?;
            }
        }
    }
    out.flush()?;
    Ok(OK)
}
