//! The four solved cases and their domain-level results.
//!
//! * `Game1`: owner leads, operator follows (KKT path, `b` relaxed).
//! * `Game2`: operator leads, owner follows (KKT path).
//! * `ElyHpr`, `NoHpr`: high-point relaxations solved as plain MILPs.

mod build;
mod check;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bilevel::{
    add_strong_duality_cut, certify, derive_kkt, linearize_complementarity, KktCertificate, Linearization,
    ReformError,
};
use crate::lp::diagnose::{diagnose_infeasibility, Violation};
use crate::lp::{backend_by_name, LpError, ModelIR, RawSolution, SolveParams, SolveStatus, VarId};
use crate::model::{ContractKind, ScenarioData};

pub(crate) use build::Coeffs;
pub use build::{build_ely_hpr, build_game1, build_game2, build_no_hpr, Game, Mirrors, Symbols};
pub use check::{check_feasibility, worst, Residual};

#[derive(Debug, Error)]
pub enum GameError {
    #[error(transparent)]
    Reform(#[from] ReformError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("profits need an optimal or gap-optimal solution, status is {0}")]
    NotOptimal(&'static str),
    #[error("unknown case `{0}` (expected game1, game2, ely-hpr or no-hpr)")]
    UnknownCase(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    Game1,
    Game2,
    ElyHpr,
    NoHpr,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Game1, Case::Game2, Case::ElyHpr, Case::NoHpr];

    pub fn label(self) -> &'static str {
        match self {
            Case::Game1 => "game1",
            Case::Game2 => "game2",
            Case::ElyHpr => "ely-hpr",
            Case::NoHpr => "no-hpr",
        }
    }

    /// Whether the owner is the decision maker whose objective is optimized.
    pub fn owner_leads(self) -> bool {
        matches!(self, Case::Game1 | Case::ElyHpr)
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Case {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Case::ALL
            .into_iter()
            .find(|c| c.label() == s.to_ascii_lowercase())
            .ok_or_else(|| GameError::UnknownCase(s.to_string()))
    }
}

/// Knobs of [`solve_case`].
#[derive(Clone, Debug, PartialEq)]
pub struct CaseOptions {
    pub backend: String,
    pub rel_gap: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<u64>,
    pub linearization: Linearization,
    /// Bound used for SOS1 members without finite bounds by the indicator
    /// backend; defaults to [`default_dual_bound`].
    pub indicator_m: Option<f64>,
    pub strong_duality: bool,
}

impl Default for CaseOptions {
    fn default() -> Self {
        CaseOptions {
            backend: "bnb".into(),
            rel_gap: 1e-3,
            time_limit_s: Some(600.0),
            node_limit: None,
            linearization: Linearization::Sos1,
            indicator_m: None,
            strong_duality: true,
        }
    }
}

/// Heuristic bound on follower duals and slacks: ten times the largest
/// price-like coefficient or the scenario M, whichever is larger.
pub fn default_dual_bound(sc: &ScenarioData) -> f64 {
    let k = Coeffs::new(sc);
    let mut big = k.c_el.max(k.crc_plus).max(k.h2_price * k.eta).max(k.penalty);
    for &x in k.tariff.iter().chain(&k.crc).chain(&k.elec) {
        big = big.max(x.abs());
    }
    (10.0 * big).max(k.big_m)
}

/// Decision values of one solved case.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionValues {
    pub p_grid: f64,
    pub p_el: [f64; 3],
    pub p_no: [f64; 3],
    pub p_e: Vec<f64>,
    pub f: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
    pub s: Vec<f64>,
    pub s_plus: Vec<f64>,
    pub b: Vec<f64>,
    pub b_s: Option<f64>,
    pub s_el: Option<Vec<f64>>,
    pub s_el_plus: Option<Vec<f64>>,
    pub r_el2: Option<Vec<f64>>,
    pub r_el3: Option<Vec<f64>>,
}

impl DecisionValues {
    pub fn from_values(sym: &Symbols, values: &[f64]) -> Self {
        let get = |v: VarId| values[v.index()];
        let many = |vs: &[VarId]| vs.iter().map(|&v| values[v.index()]).collect::<Vec<_>>();
        DecisionValues {
            p_grid: get(sym.p_grid),
            p_el: sym.p_el.map(get),
            p_no: sym.p_no.map(get),
            p_e: many(&sym.p_e),
            f: many(&sym.f),
            r2: many(&sym.r2),
            r3: many(&sym.r3),
            s: many(&sym.s),
            s_plus: many(&sym.s_plus),
            b: many(&sym.b),
            b_s: sym.b_s.map(get),
            s_el: sym.mirrors.as_ref().map(|m| many(&m.s_el)),
            s_el_plus: sym.mirrors.as_ref().map(|m| many(&m.s_el_plus)),
            r_el2: sym.mirrors.as_ref().map(|m| many(&m.r_el2)),
            r_el3: sym.mirrors.as_ref().map(|m| many(&m.r_el3)),
        }
    }

    pub fn p_el(&self, c: ContractKind) -> f64 {
        self.p_el[c.index()]
    }

    /// Curtailments the owner is paid for (mirrors when they exist).
    pub fn paid_curtailment(&self) -> (&[f64], &[f64]) {
        match (&self.s_el, &self.s_el_plus) {
            (Some(s), Some(sp)) => (s, sp),
            _ => (&self.s, &self.s_plus),
        }
    }
}

/// Everything known about one solved case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionBundle {
    pub case: Case,
    pub status: SolveStatus,
    pub gap: f64,
    pub runtime_s: f64,
    pub nodes: u64,
    /// `None` when the solver returned no point.
    pub values: Option<DecisionValues>,
    pub ely_profit: f64,
    pub no_profit: f64,
    /// Objective of the level being optimized (€, minimized).
    pub upper_objective: f64,
    /// Follower objective at the solution (KKT cases).
    pub lower_objective: Option<f64>,
    /// Follower duals by row tag (KKT cases).
    pub duals: Vec<(String, f64)>,
    #[serde(skip)]
    pub certificate: Option<KktCertificate>,
    /// Rows that must be relaxed for feasibility when infeasible.
    pub diagnosis: Vec<(String, f64)>,
}

impl SolutionBundle {
    pub fn is_success(&self) -> bool {
        self.status.is_success()
    }
}

/// Profits of both parties from a solved bundle.
///
/// Owner: hydrogen and CRC revenue minus capital, tariffs and energy.
/// Operator: tariff income minus CRC payments, penalty excluded.
pub fn extract_profits(bundle: &SolutionBundle, sc: &ScenarioData) -> Result<(f64, f64), GameError> {
    if !bundle.status.is_success() {
        return Err(GameError::NotOptimal(bundle.status.label()));
    }
    let v = bundle.values.as_ref().ok_or(GameError::NotOptimal(bundle.status.label()))?;
    Ok(profits(v, sc))
}

pub(crate) fn profits(v: &DecisionValues, sc: &ScenarioData) -> (f64, f64) {
    let k = Coeffs::new(sc);
    let (s_eff, sp_eff) = v.paid_curtailment();
    let mut ely = -k.c_el * v.p_grid;
    let mut no = 0.0;
    for i in 0..3 {
        ely -= k.tariff[i] * v.p_el[i];
        no += k.tariff[i] * v.p_no[i];
    }
    for t in 0..k.hours {
        ely += k.h2_price * v.f[t] + k.crc[t] * s_eff[t] + k.crc_plus * sp_eff[t] - k.elec[t] * v.p_e[t];
        no -= k.crc[t] * v.s[t] + k.crc_plus * v.s_plus[t];
    }
    (ely, no)
}

/// Builds, reformulates (for the games) and solves one case.
///
/// Infeasible and limit outcomes are returned as bundles with that status;
/// infeasible ones carry the relaxed-row diagnosis.
pub fn solve_case(sc: &ScenarioData, case: Case, opts: &CaseOptions) -> Result<SolutionBundle, GameError> {
    let indicator_m = opts.indicator_m.unwrap_or_else(|| default_dual_bound(sc));
    let backend = backend_by_name(&opts.backend, indicator_m)?;
    let params = SolveParams {
        rel_gap: opts.rel_gap,
        time_limit_s: opts.time_limit_s,
        node_limit: opts.node_limit,
    };
    let (model, primal, sym, artifacts, lower_obj) = match case {
        Case::Game1 | Case::Game2 => {
            let game = if case == Case::Game1 {
                let g = build_game1(sc)?;
                let b = g.sym.b.clone();
                Game { bp: g.bp.relax_binaries(&b)?, sym: g.sym }
            } else {
                build_game2(sc)?
            };
            let mut kkt = derive_kkt(&game.bp)?;
            linearize_complementarity(&mut kkt, opts.linearization)?;
            if opts.strong_duality {
                add_strong_duality_cut(&mut kkt)?;
            }
            let primal = crate::bilevel::build_hpr(&game.bp, Vec::new())?;
            let lower = game.bp.lower.objective.clone();
            (kkt.model, primal, game.sym, Some(kkt.artifacts), Some(lower))
        }
        Case::ElyHpr => {
            let (m, sym) = build_ely_hpr(sc)?;
            (m.clone(), m, sym, None, None)
        }
        Case::NoHpr => {
            let (m, sym) = build_no_hpr(sc)?;
            (m.clone(), m, sym, None, None)
        }
    };
    let raw = backend.solve(&model, &params)?;
    Ok(assemble(case, sc, &model, &primal, &sym, artifacts.as_ref(), lower_obj.as_ref(), raw)?)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    case: Case,
    sc: &ScenarioData,
    model: &ModelIR,
    primal: &ModelIR,
    sym: &Symbols,
    artifacts: Option<&crate::bilevel::ReformulationArtifacts>,
    lower_obj: Option<&crate::lp::LinExpr>,
    raw: RawSolution,
) -> Result<SolutionBundle, GameError> {
    let mut bundle = SolutionBundle {
        case,
        status: raw.status,
        gap: raw.rel_gap,
        runtime_s: raw.wall_time_s,
        nodes: raw.nodes,
        values: None,
        ely_profit: f64::NAN,
        no_profit: f64::NAN,
        upper_objective: raw.objective,
        lower_objective: None,
        duals: Vec::new(),
        certificate: None,
        diagnosis: Vec::new(),
    };
    if raw.status == SolveStatus::Infeasible {
        let mut found = diagnose_infeasibility(primal)?;
        if found.is_empty() {
            found = diagnose_infeasibility(model)?;
        }
        bundle.diagnosis = found.into_iter().map(|Violation { tag, amount }| (tag, amount)).collect();
        return Ok(bundle);
    }
    if !raw.has_point() {
        return Ok(bundle);
    }
    let values = DecisionValues::from_values(sym, &raw.values);
    let (ely, no) = profits(&values, sc);
    bundle.ely_profit = ely;
    bundle.no_profit = no;
    bundle.values = Some(values);
    bundle.lower_objective = lower_obj.and_then(|e| e.eval_dense(&raw.values));
    if let Some(art) = artifacts {
        bundle.duals = art
            .duals
            .iter()
            .map(|d| (d.tag.clone(), raw.values[d.dual.index()]))
            .collect();
        bundle.certificate = Some(certify(art, &raw.values));
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_scenario;

    fn scenario(residual: Vec<f64>) -> ScenarioData {
        let n = residual.len();
        let mut sc = ScenarioData::reference(residual, vec![20.0; n], vec![36.0; n]);
        sc.prices.crc_plus = 5.0;
        validate_scenario(sc).unwrap()
    }

    #[test]
    fn lower_row_count_for_two_hours() {
        let g = build_game1(&scenario(vec![2.0, 1.0])).unwrap();
        assert_eq!(g.bp.lower.constraints.len(), 18);
        assert_eq!(g.bp.model.num_constraints(), 1 + 4 * 2);
    }

    #[test]
    fn game2_lower_level_is_an_lp() {
        let g = build_game2(&scenario(vec![2.0, 1.0])).unwrap();
        assert!(g.bp.lower_binaries().is_empty());
    }

    #[test]
    fn case_names_round_trip() {
        for c in Case::ALL {
            assert_eq!(c.label().parse::<Case>().unwrap(), c);
        }
        assert!("game3".parse::<Case>().is_err());
    }

    #[test]
    fn zero_activity_has_zero_profit() {
        let sc = scenario(vec![2.0, 1.0]);
        let v = DecisionValues {
            p_e: vec![0.0; 2],
            f: vec![0.0; 2],
            r2: vec![0.0; 2],
            r3: vec![0.0; 2],
            s: vec![0.0; 2],
            s_plus: vec![0.0; 2],
            b: vec![0.0; 2],
            ..Default::default()
        };
        assert_eq!(profits(&v, &sc), (0.0, 0.0));
    }

    #[test]
    fn single_hour_nfa_spot_check() {
        let mut sc = scenario(vec![2.0]);
        sc.prices.electricity = vec![0.0];
        let v = DecisionValues {
            p_grid: 1.0,
            p_el: [0.0, 0.0, 1.0],
            p_no: [0.0, 0.0, 1.0],
            p_e: vec![1.0],
            f: vec![sc.tech.h2_yield],
            r2: vec![0.0],
            r3: vec![0.0],
            s: vec![0.0],
            s_plus: vec![0.0],
            b: vec![0.0],
            ..Default::default()
        };
        let (ely, no) = profits(&v, &sc);
        let scale = 1.0 / 8760.0;
        let expected = 10.0 * 18.0 - sc.tech.c_el() * scale - 26_280.0 * scale;
        assert!((ely - expected).abs() < 1e-9);
        assert!((no - 26_280.0 * scale).abs() < 1e-9);
    }
}
