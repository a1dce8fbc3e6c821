//! Parameter sweeps over the four cases and switch-point detection.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::games::{solve_case, Case, CaseOptions, SolutionBundle};
use crate::io::{SummaryRow, SUMMARY_COLUMNS};
use crate::lp::SolveStatus;
use crate::model::{validate_scenario, ScenarioData};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep plan: {0}")]
    Plan(String),
    #[error("every sweep point failed; first error: {0}")]
    AllFailed(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unknown axis `{0}` (crc-plus, h2 or theta)")]
    UnknownAxis(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("write: {0}")]
    Write(String),
}

/// Scenario parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    CrcPlusPrice,
    H2Price,
    Theta,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::CrcPlusPrice => "crc_plus_price",
            SweepAxis::H2Price => "h2_price",
            SweepAxis::Theta => "theta",
        }
    }

    /// Copy of `base` with this parameter set to `value`, revalidated.
    pub fn apply(self, base: &ScenarioData, value: f64) -> Result<ScenarioData, String> {
        let mut sc = base.clone();
        match self {
            SweepAxis::CrcPlusPrice => sc.prices.crc_plus = value,
            SweepAxis::H2Price => sc.prices.hydrogen = value,
            SweepAxis::Theta => sc.budgets.theta = value,
        }
        validate_scenario(sc).map_err(|e| e.to_string())
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SweepAxis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "crc-plus" | "crcplus" | "crc-plus-price" => Ok(SweepAxis::CrcPlusPrice),
            "h2" | "h2-price" | "hydrogen" => Ok(SweepAxis::H2Price),
            "theta" => Ok(SweepAxis::Theta),
            _ => Err(SweepError::UnknownAxis(s.to_string())),
        }
    }
}

/// Values from `from` to `to` inclusive in steps of `step`.
pub fn range_values(from: f64, to: f64, step: f64) -> Result<Vec<f64>, SweepError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(SweepError::Plan(format!("step must be positive, got {step}")));
    }
    if !(from.is_finite() && to.is_finite()) || to < from {
        return Err(SweepError::Plan(format!("empty range {from}..{to}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| from + i as f64 * step).collect())
}

#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub cases: Vec<Case>,
    pub base: ScenarioData,
    pub options: CaseOptions,
    /// Seed that produced `base`, if synthetic; recorded for provenance.
    pub seed: Option<u64>,
}

impl SweepPlan {
    pub fn new(
        axis: SweepAxis,
        values: Vec<f64>,
        cases: Vec<Case>,
        base: ScenarioData,
        options: CaseOptions,
    ) -> Result<Self, SweepError> {
        if values.is_empty() {
            return Err(SweepError::Plan("no sweep values".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SweepError::Plan("sweep values must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SweepError::Plan("sweep values must be strictly increasing".into()));
        }
        if cases.is_empty() {
            return Err(SweepError::Plan("no cases".into()));
        }
        Ok(SweepPlan { axis, values, cases, base, options, seed: None })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// One (case, value) point.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub case: Case,
    pub value: f64,
    pub status: Option<SolveStatus>,
    pub bundle: Option<SolutionBundle>,
    /// Error text when the point could not be solved at all.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn status_label(&self) -> &'static str {
        match self.status {
            Some(s) => s.label(),
            None => "error",
        }
    }

    pub fn summary(&self, axis: SweepAxis) -> SummaryRow {
        match &self.bundle {
            Some(b) => SummaryRow::from_bundle(b, Some((axis.label(), self.value))),
            None => SummaryRow {
                case: self.case.label().to_string(),
                sweep_param: Some(axis.label().to_string()),
                sweep_value: Some(self.value),
                p_grid: None,
                p_el_fa: None,
                p_el_nfa85: None,
                p_el_nfa: None,
                ely_profit: None,
                no_profit: None,
                gap: None,
                runtime_s: 0.0,
            },
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status.is_some_and(SolveStatus::is_success)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the base scenario's canonical JSON.
    pub scenario_hash: String,
    pub seed: Option<u64>,
    pub rel_gap: f64,
    pub backend: String,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// Ordered by case (plan order), then by value.
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
}

/// Hex SHA-256 of a scenario's JSON serialization.
pub fn scenario_hash(sc: &ScenarioData) -> String {
    let bytes = serde_json::to_vec(sc).expect("scenario serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn solve_point(plan: &SweepPlan, case: Case, value: f64) -> SweepRow {
    let row = |status, bundle, error| SweepRow { case, value, status, bundle, error };
    let sc = match plan.axis.apply(&plan.base, value) {
        Ok(sc) => sc,
        Err(e) => return row(None, None, Some(e)),
    };
    match solve_case(&sc, case, &plan.options) {
        Ok(b) => row(Some(b.status), Some(b), None),
        Err(e) => row(None, None, Some(e.to_string())),
    }
}

/// Solves every (case, value) point on `jobs` worker threads. Failed points
/// stay in the result with their status; only a sweep where nothing
/// succeeded is an error.
pub fn run_sweep(plan: &SweepPlan, jobs: usize) -> Result<SweepResult, SweepError> {
    let points: Vec<(Case, f64)> = plan
        .cases
        .iter()
        .flat_map(|&c| plan.values.iter().map(move |&v| (c, v)))
        .collect();
    let slots: Vec<Mutex<Option<SweepRow>>> = points.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, points.len());
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(case, value)) = points.get(i) else { break };
        let r = solve_point(plan, case, value);
        log::info!("{} {}={} -> {}", case, plan.axis, value, r.status_label());
        *slots[i].lock().expect("slot lock") = Some(r);
    };
    if workers == 1 {
        // No thread spawn, so single-threaded targets work too.
        work();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(work);
            }
        });
    }
    let rows: Vec<SweepRow> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every point solved"))
        .collect();
    if !rows.iter().any(SweepRow::succeeded) {
        let first = rows
            .iter()
            .find_map(|r| r.error.clone().or_else(|| Some(r.status_label().to_string())))
            .unwrap_or_default();
        return Err(SweepError::AllFailed(first));
    }
    Ok(SweepResult {
        axis: plan.axis,
        rows,
        provenance: Provenance {
            scenario_hash: scenario_hash(&plan.base),
            seed: plan.seed,
            rel_gap: plan.options.rel_gap,
            backend: plan.options.backend.clone(),
        },
    })
}

/// Condition tested by [`find_switch`] at each successful point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Predicate {
    /// Field above `1e-6`.
    Positive,
    Above(f64),
    Below(f64),
    /// Field lower than at the previous successful point.
    Decreasing,
    Increasing,
}

impl Predicate {
    fn holds(self, prev: Option<f64>, cur: f64) -> bool {
        match self {
            Predicate::Positive => cur > 1e-6,
            Predicate::Above(x) => cur > x,
            Predicate::Below(x) => cur < x,
            Predicate::Decreasing => prev.is_some_and(|p| cur < p - 1e-9 * (1.0 + p.abs())),
            Predicate::Increasing => prev.is_some_and(|p| cur > p + 1e-9 * (1.0 + p.abs())),
        }
    }
}

impl FromStr for Predicate {
    type Err = SweepError;

    /// `positive`, `decreasing`, `increasing`, `>X` or `<X`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SweepError::UnknownPredicate(s.to_string());
        let s = s.trim();
        match s {
            "positive" => Ok(Predicate::Positive),
            "decreasing" => Ok(Predicate::Decreasing),
            "increasing" => Ok(Predicate::Increasing),
            _ if s.starts_with('>') => s[1..].trim().parse().map(Predicate::Above).map_err(|_| bad()),
            _ if s.starts_with('<') => s[1..].trim().parse().map(Predicate::Below).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Smallest axis value at which `predicate` on `field` turns from false to
/// true for `case`, or true at the first point. Failed points are skipped.
pub fn find_switch(result: &SweepResult, case: Case, field: &str, predicate: Predicate) -> Result<Option<f64>, SweepError> {
    if !SUMMARY_COLUMNS.contains(&field) || field == "case" || field == "sweep_param" {
        return Err(SweepError::UnknownField(field.to_string()));
    }
    let mut prev: Option<f64> = None;
    let mut was_true = false;
    for row in result.rows.iter().filter(|r| r.case == case && r.succeeded()) {
        let summary = row.summary(result.axis);
        let Some(Some(cur)) = summary.field(field) else { continue };
        let now = predicate.holds(prev, cur);
        if now && !was_true {
            return Ok(Some(row.value));
        }
        was_true = now;
        prev = Some(cur);
    }
    Ok(None)
}

/// Plot-data layout of [`write_tidy`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Comma separated, one header row.
    Tidy,
    /// Whitespace separated with `#` comments and one block per case,
    /// separated by two blank lines so `index N` selects a case.
    Gnuplot,
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Writes one row per (case, value): the summary columns plus status and
/// provenance.
pub fn write_tidy<W: Write>(result: &SweepResult, out: W, layout: Layout) -> Result<(), SweepError> {
    let err = |e: std::io::Error| SweepError::Write(e.to_string());
    let p = &result.provenance;
    let seed = p.seed.map_or_else(String::new, |s| s.to_string());
    match layout {
        Layout::Tidy => {
            let mut w = csv::Writer::from_writer(out);
            let mut header: Vec<&str> = SUMMARY_COLUMNS.to_vec();
            header.extend(["status", "scenario_hash", "seed"]);
            w.write_record(&header).map_err(|e| SweepError::Write(e.to_string()))?;
            for row in &result.rows {
                let s = row.summary(result.axis);
                let rec = [
                    s.case.clone(),
                    s.sweep_param.clone().unwrap_or_default(),
                    cell(s.sweep_value),
                    cell(s.p_grid),
                    cell(s.p_el_fa),
                    cell(s.p_el_nfa85),
                    cell(s.p_el_nfa),
                    cell(s.ely_profit),
                    cell(s.no_profit),
                    cell(s.gap),
                    s.runtime_s.to_string(),
                    row.status_label().to_string(),
                    p.scenario_hash.clone(),
                    seed.clone(),
                ];
                w.write_record(&rec).map_err(|e| SweepError::Write(e.to_string()))?;
            }
            w.flush().map_err(err)
        }
        Layout::Gnuplot => {
            let mut w = std::io::BufWriter::new(out);
            writeln!(w, "# scenario {} seed {} gap {} backend {}", p.scenario_hash, seed, p.rel_gap, p.backend).map_err(err)?;
            let mut cases: Vec<Case> = Vec::new();
            for r in &result.rows {
                if !cases.contains(&r.case) {
                    cases.push(r.case);
                }
            }
            let na = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), |v| v.to_string());
            for (i, case) in cases.iter().enumerate() {
                if i > 0 {
                    writeln!(w, "\n").map_err(err)?;
                }
                writeln!(w, "# case {case}").map_err(err)?;
                writeln!(w, "# {} p_grid p_el_fa p_el_nfa85 p_el_nfa ely_profit no_profit gap runtime_s status", result.axis)
                    .map_err(err)?;
                for row in result.rows.iter().filter(|r| r.case == *case) {
                    let s = row.summary(result.axis);
                    writeln!(
                        w,
                        "{} {} {} {} {} {} {} {} {} {}",
                        row.value,
                        na(s.p_grid),
                        na(s.p_el_fa),
                        na(s.p_el_nfa85),
                        na(s.p_el_nfa),
                        na(s.ely_profit),
                        na(s.no_profit),
                        na(s.gap),
                        s.runtime_s,
                        row.status_label()
                    )
                    .map_err(err)?;
                }
            }
            w.flush().map_err(err)
        }
    }
}
