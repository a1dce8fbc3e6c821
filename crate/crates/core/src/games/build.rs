//! Instantiation of the two Stackelberg games and their high-point
//! relaxations over a validated scenario.

use crate::bilevel::{build_hpr, BilevelProblem, ReformError};
use crate::lp::{Constraint, LinExpr, ModelIR, Relop, Sense, VarId, VarKind};
use crate::model::{BudgetMode, ContractKind, ScenarioData};

const INF: f64 = f64::INFINITY;

/// Variable handles of one game instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbols {
    pub p_grid: VarId,
    pub p_el: [VarId; 3],
    pub p_no: [VarId; 3],
    pub p_e: Vec<VarId>,
    pub f: Vec<VarId>,
    pub r2: Vec<VarId>,
    pub r3: Vec<VarId>,
    pub s: Vec<VarId>,
    pub s_plus: Vec<VarId>,
    pub b: Vec<VarId>,
    /// NFA85 switch of the owner-side relaxation.
    pub b_s: Option<VarId>,
    /// Owner-side mirrors when the owner is the follower.
    pub mirrors: Option<Mirrors>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mirrors {
    pub s_el: Vec<VarId>,
    pub s_el_plus: Vec<VarId>,
    pub r_el2: Vec<VarId>,
    pub r_el3: Vec<VarId>,
}

/// A bilevel game with its symbol table.
#[derive(Clone, Debug)]
pub struct Game {
    pub bp: BilevelProblem,
    pub sym: Symbols,
}

/// Per-scenario coefficients after horizon scaling.
#[derive(Clone, Debug)]
pub(crate) struct Coeffs {
    pub hours: usize,
    pub c_el: f64,
    pub tariff: [f64; 3],
    pub crc: Vec<f64>,
    pub crc_plus: f64,
    pub h2_price: f64,
    pub elec: Vec<f64>,
    pub eta: f64,
    pub alpha: f64,
    pub demand: Vec<f64>,
    pub residual: Vec<f64>,
    pub nfa85_events: f64,
    pub nfa_hours: f64,
    pub spend: f64,
    pub penalty: f64,
    pub mode: BudgetMode,
    pub big_m: f64,
}

impl Coeffs {
    pub fn new(sc: &ScenarioData) -> Self {
        let hours = sc.hours();
        Coeffs {
            hours,
            c_el: sc.scaled_c_el(),
            tariff: ContractKind::ALL.map(|c| sc.scaled_tariff(c)),
            crc: (0..hours).map(|t| sc.prices.crc_at(t)).collect(),
            crc_plus: sc.prices.crc_plus,
            h2_price: sc.prices.hydrogen,
            elec: sc.prices.electricity.clone(),
            eta: sc.tech.h2_yield,
            alpha: sc.tech.min_load_ratio,
            demand: sc.network.h2_offtake.clone(),
            residual: sc.network.residual_capacity.clone(),
            nfa85_events: sc.budgets.nfa85_time_share * hours as f64,
            nfa_hours: sc.budgets.nfa_energy_hours,
            spend: sc.budgets.hourly_spend(),
            penalty: sc.budgets.penalty,
            mode: sc.budgets.mode,
            big_m: sc.big_m(),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Level {
    Upper,
    Lower,
}

fn var(bp: &mut BilevelProblem, level: Level, name: String, kind: VarKind, hi: f64) -> Result<VarId, ReformError> {
    match level {
        Level::Upper => bp.add_upper_var(name, kind, 0.0, hi),
        Level::Lower => bp.add_lower_var(name, kind, 0.0, hi),
    }
}

fn vars(bp: &mut BilevelProblem, level: Level, stem: &str, hours: usize, kind: VarKind, hi: f64) -> Result<Vec<VarId>, ReformError> {
    (0..hours)
        .map(|t| var(bp, level, format!("{stem}[t={t}]"), kind, hi))
        .collect()
}

fn row(bp: &mut BilevelProblem, level: Level, expr: LinExpr, relop: Relop, rhs: f64, tag: String) -> Result<(), ReformError> {
    match level {
        Level::Upper => bp.add_upper_constraint(expr, relop, rhs, tag),
        Level::Lower => bp.add_lower_constraint(expr, relop, rhs, tag),
    }
}

fn contract_vars(bp: &mut BilevelProblem, level: Level, stem: &str, hi: f64) -> Result<[VarId; 3], ReformError> {
    let mut out = Vec::with_capacity(3);
    for c in ContractKind::ALL {
        out.push(var(bp, level, format!("{stem}[{c}]"), VarKind::Continuous, hi)?);
    }
    Ok([out[0], out[1], out[2]])
}

/// Operator-side curtailment rows: contract caps, capacity balance,
/// residual capacity, NFA85 and NFA budgets, the CM budget and the
/// no-double-curtailment row.
fn operator_rows(bp: &mut BilevelProblem, lv: Level, sym: &Symbols, k: &Coeffs) -> Result<(), ReformError> {
    for c in ContractKind::ALL {
        let i = c.index();
        row(bp, lv, LinExpr::from(sym.p_no[i]) - LinExpr::from(sym.p_el[i]), Relop::Le, 0.0, format!("no_contract_cap[{c}]"))?;
    }
    row(bp, lv, LinExpr::sum(sym.p_no) - LinExpr::from(sym.p_grid), Relop::Eq, 0.0, "grid_capacity_balance".into())?;
    for t in 0..k.hours {
        let curtail = LinExpr::sum([sym.s[t], sym.s_plus[t], sym.r2[t], sym.r3[t]]);
        row(bp, lv, LinExpr::from(sym.p_grid) - curtail, Relop::Le, k.residual[t], format!("residual_capacity[t={t}]"))?;
    }
    for t in 0..k.hours {
        row(bp, lv, LinExpr::from(sym.r2[t]) - LinExpr::from(sym.p_no[1]), Relop::Le, 0.0, format!("nfa85_cap[t={t}]"))?;
        let act = LinExpr::from(sym.r2[t]).with_term(sym.b[t], -k.demand[t] / k.eta);
        row(bp, lv, act, Relop::Le, 0.0, format!("nfa85_activation[t={t}]"))?;
    }
    row(bp, lv, LinExpr::sum(sym.b.iter().copied()), Relop::Le, k.nfa85_events, "nfa85_time_budget".into())?;
    for t in 0..k.hours {
        row(bp, lv, LinExpr::from(sym.r3[t]) - LinExpr::from(sym.p_no[2]), Relop::Le, 0.0, format!("nfa_cap[t={t}]"))?;
    }
    let energy = LinExpr::sum(sym.r3.iter().copied()).with_term(sym.p_no[2], -k.nfa_hours);
    row(bp, lv, energy, Relop::Le, 0.0, "nfa_energy_budget".into())?;
    for t in 0..k.hours {
        let pinned = match k.mode {
            BudgetMode::PinCrc => LinExpr::term(sym.s[t], k.crc[t]),
            BudgetMode::PinCrcPlus => LinExpr::term(sym.s_plus[t], k.crc_plus),
        };
        row(bp, lv, pinned, Relop::Eq, k.spend, format!("cm_budget[t={t}]"))?;
    }
    for t in 0..k.hours {
        let lhs = LinExpr::sum([sym.s[t], sym.s_plus[t], sym.r2[t]]) - LinExpr::sum([sym.p_no[0], sym.p_no[1]]);
        row(bp, lv, lhs, Relop::Le, 0.0, format!("no_double_curtail[t={t}]"))?;
    }
    Ok(())
}

/// Owner rows shared by both games: contract total, minimum load and the
/// hydrogen limits.
fn owner_common_rows(bp: &mut BilevelProblem, lv: Level, sym: &Symbols, k: &Coeffs) -> Result<(), ReformError> {
    row(bp, lv, LinExpr::sum(sym.p_el) - LinExpr::from(sym.p_grid), Relop::Le, 0.0, "ely_contract_total".into())?;
    for t in 0..k.hours {
        row(bp, lv, LinExpr::from(sym.p_e[t]).with_term(sym.p_grid, -k.alpha), Relop::Ge, 0.0, format!("min_load[t={t}]"))?;
    }
    for t in 0..k.hours {
        row(bp, lv, LinExpr::from(sym.f[t]).with_term(sym.p_e[t], -k.eta), Relop::Le, 0.0, format!("h2_yield[t={t}]"))?;
    }
    for t in 0..k.hours {
        row(bp, lv, LinExpr::from(sym.f[t]), Relop::Le, k.demand[t], format!("h2_offtake[t={t}]"))?;
    }
    Ok(())
}

/// Owner cost: capital, tariffs and energy minus hydrogen and CRC revenue.
/// `crc` and `crc_plus` are the curtailments the owner is paid for.
fn owner_cost(sym: &Symbols, k: &Coeffs, crc: &[VarId], crc_plus: &[VarId]) -> LinExpr {
    let mut e = LinExpr::term(sym.p_grid, k.c_el);
    for i in 0..3 {
        e.add_term(sym.p_el[i], k.tariff[i]);
    }
    for t in 0..k.hours {
        e.add_term(sym.p_e[t], k.elec[t]);
        e.add_term(sym.f[t], -k.h2_price);
        e.add_term(crc[t], -k.crc[t]);
        e.add_term(crc_plus[t], -k.crc_plus);
    }
    e
}

/// Operator cost: CRC payments minus tariff income plus the curtailment
/// penalty.
fn operator_cost(sym: &Symbols, k: &Coeffs) -> LinExpr {
    let mut e = LinExpr::new();
    for t in 0..k.hours {
        e.add_term(sym.s[t], k.crc[t]);
        e.add_term(sym.s_plus[t], k.crc_plus);
        e.add_term(sym.r2[t], k.penalty);
        e.add_term(sym.r3[t], k.penalty);
    }
    for i in 0..3 {
        e.add_term(sym.p_no[i], -k.tariff[i]);
    }
    e
}

/// Owner leads, operator follows. `b` is binary; relax it before the KKT
/// path.
pub fn build_game1(sc: &ScenarioData) -> Result<Game, ReformError> {
    let k = Coeffs::new(sc);
    let n = k.hours;
    let mut bp = BilevelProblem::new();
    let (up, lo) = (Level::Upper, Level::Lower);
    let p_el = contract_vars(&mut bp, up, "p_el", k.big_m)?;
    let p_e = vars(&mut bp, up, "p_e", n, VarKind::Continuous, INF)?;
    let f = vars(&mut bp, up, "f", n, VarKind::Continuous, INF)?;
    let p_grid = var(&mut bp, lo, "p_grid".into(), VarKind::Continuous, INF)?;
    let p_no = contract_vars(&mut bp, lo, "p_no", INF)?;
    let r2 = vars(&mut bp, lo, "r2", n, VarKind::Continuous, INF)?;
    let r3 = vars(&mut bp, lo, "r3", n, VarKind::Continuous, INF)?;
    let s = vars(&mut bp, lo, "s", n, VarKind::Continuous, INF)?;
    let s_plus = vars(&mut bp, lo, "s_plus", n, VarKind::Continuous, INF)?;
    let b = vars(&mut bp, lo, "b", n, VarKind::Binary, 1.0)?;
    let sym = Symbols { p_grid, p_el, p_no, p_e, f, r2, r3, s, s_plus, b, b_s: None, mirrors: None };

    owner_common_rows(&mut bp, up, &sym, &k)?;
    for t in 0..n {
        let lhs = LinExpr::from(sym.p_e[t]) - LinExpr::sum(sym.p_el)
            + LinExpr::sum([sym.s[t], sym.s_plus[t], sym.r2[t], sym.r3[t]]);
        row(&mut bp, up, lhs, Relop::Le, 0.0, format!("ely_power_cap[t={t}]"))?;
    }
    operator_rows(&mut bp, lo, &sym, &k)?;
    bp.set_upper_objective(Sense::Minimize, owner_cost(&sym, &k, &sym.s, &sym.s_plus))?;
    bp.set_lower_objective(operator_cost(&sym, &k))?;
    Ok(Game { bp, sym })
}

/// Operator leads, owner follows with mirrored curtailment variables.
pub fn build_game2(sc: &ScenarioData) -> Result<Game, ReformError> {
    let k = Coeffs::new(sc);
    let n = k.hours;
    let m = k.big_m;
    let mut bp = BilevelProblem::new();
    let (up, lo) = (Level::Upper, Level::Lower);
    let p_grid = var(&mut bp, up, "p_grid".into(), VarKind::Continuous, m)?;
    let p_no = contract_vars(&mut bp, up, "p_no", m)?;
    let r2 = vars(&mut bp, up, "r2", n, VarKind::Continuous, m)?;
    let r3 = vars(&mut bp, up, "r3", n, VarKind::Continuous, m)?;
    let s = vars(&mut bp, up, "s", n, VarKind::Continuous, m)?;
    let s_plus = vars(&mut bp, up, "s_plus", n, VarKind::Continuous, m)?;
    let b = vars(&mut bp, up, "b", n, VarKind::Binary, 1.0)?;
    let p_el = contract_vars(&mut bp, lo, "p_el", INF)?;
    let p_e = vars(&mut bp, lo, "p_e", n, VarKind::Continuous, INF)?;
    let f = vars(&mut bp, lo, "f", n, VarKind::Continuous, INF)?;
    let mirrors = Mirrors {
        s_el: vars(&mut bp, lo, "s_el", n, VarKind::Continuous, INF)?,
        s_el_plus: vars(&mut bp, lo, "s_el_plus", n, VarKind::Continuous, INF)?,
        r_el2: vars(&mut bp, lo, "r_el2", n, VarKind::Continuous, INF)?,
        r_el3: vars(&mut bp, lo, "r_el3", n, VarKind::Continuous, INF)?,
    };
    let sym = Symbols { p_grid, p_el, p_no, p_e, f, r2, r3, s, s_plus, b, b_s: None, mirrors: Some(mirrors.clone()) };

    operator_rows(&mut bp, up, &sym, &k)?;
    owner_common_rows(&mut bp, lo, &sym, &k)?;
    for t in 0..n {
        row(&mut bp, lo, LinExpr::from(mirrors.s_el[t]) - LinExpr::from(sym.s[t]), Relop::Le, 0.0, format!("ely_crc_cap[t={t}]"))?;
    }
    for t in 0..n {
        row(&mut bp, lo, LinExpr::from(mirrors.s_el_plus[t]) - LinExpr::from(sym.s_plus[t]), Relop::Le, 0.0, format!("ely_crc_plus_cap[t={t}]"))?;
    }
    for t in 0..n {
        let lhs = LinExpr::sum([mirrors.s_el[t], mirrors.s_el_plus[t]]) - LinExpr::sum([sym.p_el[0], sym.p_el[1]]);
        row(&mut bp, lo, lhs, Relop::Le, 0.0, format!("ely_crc_contract[t={t}]"))?;
    }
    for t in 0..n {
        let lhs = LinExpr::from(sym.p_e[t]) - LinExpr::sum(sym.p_no)
            + LinExpr::sum([sym.s[t], sym.s_plus[t], sym.r2[t], sym.r3[t]]);
        row(&mut bp, lo, lhs, Relop::Le, 0.0, format!("ely_power_cap[t={t}]"))?;
    }
    for t in 0..n {
        let lhs = LinExpr::sum(sym.p_el)
            - LinExpr::sum([mirrors.s_el[t], mirrors.s_el_plus[t], mirrors.r_el2[t], mirrors.r_el3[t]]);
        row(&mut bp, lo, lhs, Relop::Le, k.residual[t], format!("ely_residual_view[t={t}]"))?;
    }
    for t in 0..n {
        row(&mut bp, lo, LinExpr::from(mirrors.r_el3[t]) - LinExpr::from(sym.r3[t]), Relop::Le, 0.0, format!("ely_nfa_view[t={t}]"))?;
    }
    for t in 0..n {
        row(&mut bp, lo, LinExpr::from(mirrors.r_el2[t]) - LinExpr::from(sym.r2[t]), Relop::Le, 0.0, format!("ely_nfa85_view[t={t}]"))?;
    }
    bp.set_upper_objective(Sense::Minimize, operator_cost(&sym, &k))?;
    bp.set_lower_objective(owner_cost(&sym, &k, &mirrors.s_el, &mirrors.s_el_plus))?;
    Ok(Game { bp, sym })
}

/// Owner-side high-point relaxation with the NFA85 priority rows.
///
/// The time-budget count is rounded down to an integer because `b` is
/// binary; with a fractional `B·|T|` the unrounded row would forbid any NFA85
/// capacity.
pub fn build_ely_hpr(sc: &ScenarioData) -> Result<(ModelIR, Symbols), ReformError> {
    let Game { mut bp, mut sym } = build_game1(sc)?;
    let k = Coeffs::new(sc);
    let b_s = bp.add_upper_var("b_s", VarKind::Binary, 0.0, 1.0)?;
    sym.b_s = Some(b_s);
    let events = (k.nfa85_events + 1e-9).floor();
    let extra = vec![
        Constraint::new(
            LinExpr::sum(sym.b.iter().copied()).with_term(b_s, -events),
            Relop::Ge,
            0.0,
            "hpr_nfa85_priority",
        ),
        Constraint::new(
            LinExpr::term(b_s, k.big_m).with_term(sym.p_el[1], -1.0),
            Relop::Ge,
            0.0,
            "hpr_nfa85_switch",
        ),
    ];
    Ok((build_hpr(&bp, extra)?, sym))
}

/// Operator-side high-point relaxation.
pub fn build_no_hpr(sc: &ScenarioData) -> Result<(ModelIR, Symbols), ReformError> {
    let Game { bp, sym } = build_game2(sc)?;
    Ok((build_hpr(&bp, Vec::new())?, sym))
}
