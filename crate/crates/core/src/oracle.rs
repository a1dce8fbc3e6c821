//! Brute-force bilevel oracle for tiny instances.
//!
//! Leader decisions that the follower can see are enumerated on a grid. At
//! each grid point the follower value `φ` is computed exactly, then the
//! remaining leader decisions are completed optimistically: the leader
//! objective is minimized over every row with the follower objective held at
//! `φ`. The result is a true bilevel value at that point, so the grid minimum
//! is an upper bound on the bilevel optimum that tightens as the step shrinks.

use std::io::Write;

use thiserror::Error;

use crate::bilevel::{BilevelProblem, ReformError};
use crate::games::{build_game1, build_game2, profits, Case, DecisionValues, Game, GameError, SolutionBundle, Symbols};
use crate::lp::{
    Backend, BranchAndBound, Constraint, LinExpr, LpError, ModelIR, Relop, Sense, SolveParams, SolveStatus, VarId,
};
use crate::model::{BudgetMode, ScenarioData};

/// Upper limit on grid points times hours, a proxy for oracle work.
pub const MAX_GRID_POINTS: u128 = 1_000_000;

const PHI_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid has {points} points over {hours} hours, limit is {limit} point-hours")]
    GuardExceeded { points: u128, hours: usize, limit: u128 },
    #[error("the oracle handles game1 and game2 only, got {0}")]
    UnsupportedCase(Case),
    #[error("no grid point admits a follower response")]
    NoFeasiblePoint,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Reform(#[from] ReformError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("report: {0}")]
    Report(String),
}

/// Enumeration grid for leader capacities and curtailments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// MW between neighbouring grid values.
    pub step: f64,
    /// Largest enumerated capacity (MW).
    pub ceiling: f64,
}

impl GridSpec {
    pub fn new(step: f64, ceiling: f64) -> Result<Self, OracleError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(OracleError::InvalidGrid(format!("step must be positive, got {step}")));
        }
        if !(ceiling.is_finite() && ceiling >= 0.0) {
            return Err(OracleError::InvalidGrid(format!("ceiling must be non-negative, got {ceiling}")));
        }
        Ok(GridSpec { step, ceiling })
    }

    /// Number of grid intervals up to the ceiling.
    pub fn levels(&self) -> usize {
        ((self.ceiling / self.step) + 1e-9).floor() as usize
    }

    fn value(&self, level: usize) -> f64 {
        level as f64 * self.step
    }
}

/// An enumerated leader quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub expr: LinExpr,
}

/// Follower and completion outcome at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointOutcome {
    pub point: Vec<f64>,
    pub follower_status: SolveStatus,
    pub follower_objective: f64,
    /// `NaN` when no optimistic completion exists.
    pub leader_objective: f64,
}

/// Follower optimum for a complete leader assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct FollowerOutcome {
    pub status: SolveStatus,
    pub objective: f64,
    /// Dense values over the game's variables (leader ones at their fixes).
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub case: Case,
    pub axes: Vec<String>,
    pub best_point: Vec<f64>,
    pub objective: f64,
    pub bundle: SolutionBundle,
    pub outcomes: Vec<PointOutcome>,
}

impl OracleResult {
    /// CSV report: one row per grid point.
    pub fn write_report<W: Write>(&self, out: W) -> Result<(), OracleError> {
        let err = |e: csv::Error| OracleError::Report(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.axes.clone();
        header.extend(["follower_status", "follower_objective", "leader_objective"].map(String::from));
        w.write_record(&header).map_err(err)?;
        for o in &self.outcomes {
            let mut rec: Vec<String> = o.point.iter().map(|x| x.to_string()).collect();
            rec.push(o.follower_status.label().to_string());
            rec.push(o.follower_objective.to_string());
            rec.push(o.leader_objective.to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| OracleError::Report(e.to_string()))
    }
}

fn exact() -> BranchAndBound {
    BranchAndBound::native()
}

fn exact_params() -> SolveParams {
    SolveParams { rel_gap: 1e-9, time_limit_s: None, node_limit: None }
}

/// The game as the oracle sees it. Game I's `b` is relaxed to match the
/// reformulation path.
pub fn oracle_game(sc: &ScenarioData, case: Case) -> Result<Game, OracleError> {
    match case {
        Case::Game1 => {
            let g = build_game1(sc)?;
            let b = g.sym.b.clone();
            Ok(Game { bp: g.bp.relax_binaries(&b)?, sym: g.sym })
        }
        Case::Game2 => Ok(build_game2(sc)?),
        other => Err(OracleError::UnsupportedCase(other)),
    }
}

/// Leader quantities that determine the follower's problem.
///
/// Game I: the three contracted capacities. Game II: grid capacity, the
/// unpinned CRC curtailment per hour and the combined NFA85 plus NFA
/// curtailment per hour; the owner only sees that sum.
pub fn axes(sym: &Symbols, sc: &ScenarioData, case: Case) -> Result<Vec<Axis>, OracleError> {
    match case {
        Case::Game1 => Ok(crate::model::ContractKind::ALL
            .iter()
            .map(|c| Axis { name: format!("p_el[{c}]"), expr: LinExpr::from(sym.p_el[c.index()]) })
            .collect()),
        Case::Game2 => {
            let (free, stem) = match sc.budgets.mode {
                BudgetMode::PinCrc => (&sym.s_plus, "s_plus"),
                BudgetMode::PinCrcPlus => (&sym.s, "s"),
            };
            let mut out = vec![Axis { name: "p_grid".into(), expr: LinExpr::from(sym.p_grid) }];
            for t in 0..sc.hours() {
                out.push(Axis { name: format!("{stem}[t={t}]"), expr: LinExpr::from(free[t]) });
                out.push(Axis { name: format!("r[t={t}]"), expr: LinExpr::sum([sym.r2[t], sym.r3[t]]) });
            }
            Ok(out)
        }
        other => Err(OracleError::UnsupportedCase(other)),
    }
}

/// Pinned curtailment per hour (the budget row fixes it).
fn pinned(sc: &ScenarioData, t: usize) -> f64 {
    let spend = sc.budgets.hourly_spend();
    let price = match sc.budgets.mode {
        BudgetMode::PinCrc => sc.prices.crc_at(t),
        BudgetMode::PinCrcPlus => sc.prices.crc_plus,
    };
    if spend == 0.0 {
        0.0
    } else {
        spend / price
    }
}

fn curtail_bands(sc: &ScenarioData) -> Vec<CurtailBand> {
    // Hourly curtailment is bounded below by the residual capacity row and
    // above by the owner's minimum load under its power cap; pairs outside
    // that band admit no feasible completion.
    (0..sc.hours())
        .map(|t| CurtailBand {
            pin: pinned(sc, t),
            residual: sc.network.residual_capacity[t],
            headroom: 1.0 - sc.tech.min_load_ratio,
        })
        .collect()
}

/// Number of grid points the oracle would visit. Fails when points times
/// hours exceeds [`MAX_GRID_POINTS`], without enumerating anything.
pub fn grid_size(sc: &ScenarioData, case: Case, grid: &GridSpec) -> Result<u128, OracleError> {
    let n = grid.levels();
    let count = match case {
        Case::Game1 => ((n + 1) as u128).pow(3),
        Case::Game2 => {
            let bands = curtail_bands(sc);
            let mut count: u128 = 0;
            for k in 0..=n {
                let mut per = 1u128;
                for band in &bands {
                    per = per.saturating_mul(band.pairs(grid, k).len() as u128);
                    if per == 0 {
                        break;
                    }
                }
                count = count.saturating_add(per);
            }
            count
        }
        other => return Err(OracleError::UnsupportedCase(other)),
    };
    guard(count, sc.hours())?;
    Ok(count)
}

/// Grid points in lexicographic order, after the guard check.
pub fn grid_points(sc: &ScenarioData, case: Case, grid: &GridSpec) -> Result<Vec<Vec<f64>>, OracleError> {
    let count = grid_size(sc, case, grid)?;
    let n = grid.levels();
    let mut out = Vec::with_capacity(count as usize);
    if case == Case::Game1 {
        for a in 0..=n {
            for b in 0..=n {
                for c in 0..=n {
                    out.push(vec![grid.value(a), grid.value(b), grid.value(c)]);
                }
            }
        }
        return Ok(out);
    }
    let bands = curtail_bands(sc);
    for k in 0..=n {
        let mut partial = vec![vec![grid.value(k)]];
        for band in &bands {
            let pairs = band.pairs(grid, k);
            let mut next = Vec::with_capacity(partial.len() * pairs.len());
            for prefix in &partial {
                for &(a, r) in &pairs {
                    let mut q = prefix.clone();
                    q.extend([a, r]);
                    next.push(q);
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    Ok(out)
}

struct CurtailBand {
    pin: f64,
    residual: f64,
    headroom: f64,
}

impl CurtailBand {
    /// Grid pairs (free CRC curtailment, agreement curtailment) whose total
    /// with the pinned part lies in `[cap - residual, headroom * cap]`.
    fn pairs(&self, grid: &GridSpec, k: usize) -> Vec<(f64, f64)> {
        let cap = grid.value(k);
        let lo = cap - self.residual - 1e-9;
        let hi = self.headroom * cap + 1e-9;
        let mut out = Vec::new();
        for a in 0..=k {
            for r in 0..=(k - a) {
                let (va, vr) = (grid.value(a), grid.value(r));
                let total = va + vr + self.pin;
                if total >= lo && total <= hi {
                    out.push((va, vr));
                }
            }
        }
        out
    }
}

fn guard(points: u128, hours: usize) -> Result<(), OracleError> {
    if points.saturating_mul(hours.max(1) as u128) > MAX_GRID_POINTS {
        Err(OracleError::GuardExceeded { points, hours, limit: MAX_GRID_POINTS })
    } else {
        Ok(())
    }
}

/// Upper rows that reference no follower variable.
fn pure_leader_rows(bp: &BilevelProblem) -> Vec<Constraint> {
    bp.model
        .constraints()
        .iter()
        .filter(|c| c.expr.vars().all(|v| !bp.is_lower(v)))
        .cloned()
        .collect()
}

fn axis_rows(axes: &[Axis], point: &[f64]) -> Vec<Constraint> {
    axes.iter()
        .zip(point)
        .map(|(a, &v)| Constraint::new(a.expr.clone(), Relop::Eq, v, format!("axis[{}]", a.name)))
        .collect()
}

fn phi_cap(phi: f64) -> f64 {
    phi + PHI_TOL * (1.0 + phi.abs())
}

/// Precomputed pieces shared by every grid point.
struct Plan {
    game: Game,
    axes: Vec<Axis>,
    follower_base: ModelIR,
    completion_base: ModelIR,
}

impl Plan {
    fn new(game: Game, axes: Vec<Axis>) -> Result<Self, OracleError> {
        let bp = &game.bp;
        let mut follower_base = bp.follower_model(&[], false)?;
        for c in pure_leader_rows(bp) {
            follower_base.push_constraint(c)?;
        }
        let mut completion_base = bp.model.clone();
        for c in &bp.lower.constraints {
            completion_base.push_constraint(c.clone())?;
        }
        Ok(Plan { game, axes, follower_base, completion_base })
    }

    fn evaluate(&self, point: &[f64], backend: &dyn Backend) -> Result<(PointOutcome, Vec<f64>), OracleError> {
        let params = exact_params();
        let mut fm = self.follower_base.clone();
        for c in axis_rows(&self.axes, point) {
            fm.push_constraint(c)?;
        }
        let fr = backend.solve(&fm, &params)?;
        if !fr.status.is_success() {
            let o = PointOutcome {
                point: point.to_vec(),
                follower_status: fr.status,
                follower_objective: f64::NAN,
                leader_objective: f64::NAN,
            };
            return Ok((o, Vec::new()));
        }
        let phi = fr.objective;
        let mut cm = self.completion_base.clone();
        for c in axis_rows(&self.axes, point) {
            cm.push_constraint(c)?;
        }
        cm.push_constraint(Constraint::new(
            self.game.bp.lower.objective.clone(),
            Relop::Le,
            phi_cap(phi),
            "follower_value",
        ))?;
        let cr = backend.solve(&cm, &params)?;
        let (leader, values) = if cr.status.is_success() { (cr.objective, cr.values) } else { (f64::NAN, Vec::new()) };
        let o = PointOutcome {
            point: point.to_vec(),
            follower_status: fr.status,
            follower_objective: phi,
            leader_objective: leader,
        };
        Ok((o, values))
    }
}

/// Follower optimum for a full leader assignment, ties broken in the
/// leader's favour.
pub fn solve_follower(
    sc: &ScenarioData,
    case: Case,
    leader_fix: &[(VarId, f64)],
) -> Result<FollowerOutcome, OracleError> {
    let game = oracle_game(sc, case)?;
    let bp = &game.bp;
    for v in bp.model.var_ids().filter(|&v| !bp.is_lower(v)) {
        if !leader_fix.iter().any(|&(f, _)| f == v) {
            let name = bp.model.var(v).name.clone();
            return Err(OracleError::InvalidGrid(format!("leader variable `{name}` is not fixed")));
        }
    }
    let backend = exact();
    let params = exact_params();
    let fm = bp.follower_model(leader_fix, false)?;
    let fr = backend.solve(&fm, &params)?;
    if !fr.status.is_success() {
        return Ok(FollowerOutcome { status: fr.status, objective: f64::NAN, values: Vec::new() });
    }
    let mut tie = fm.clone();
    tie.set_objective(Sense::Minimize, bp.model.objective().map(|o| o.expr.clone()).unwrap_or_default())?;
    tie.push_constraint(Constraint::new(bp.lower.objective.clone(), Relop::Le, phi_cap(fr.objective), "follower_value"))?;
    let tr = backend.solve(&tie, &params)?;
    let values = if tr.status.is_success() { tr.values } else { fr.values };
    Ok(FollowerOutcome { status: fr.status, objective: fr.objective, values })
}

/// Exhaustive scan over the leader grid on `jobs` threads.
///
/// The reduction is a deterministic minimum: ties within `1e-9` relative
/// keep the lexicographically smaller point.
pub fn enumerate_bilevel(
    sc: &ScenarioData,
    case: Case,
    grid: &GridSpec,
    jobs: usize,
) -> Result<OracleResult, OracleError> {
    let started = web_time::Instant::now();
    let points = grid_points(sc, case, grid)?;
    let game = oracle_game(sc, case)?;
    let ax = axes(&game.sym, sc, case)?;
    let plan = Plan::new(game, ax)?;
    let jobs = jobs.max(1).min(points.len().max(1));
    let chunk = points.len().div_ceil(jobs).max(1);

    let mut results: Vec<Result<(PointOutcome, Vec<f64>), OracleError>> = Vec::with_capacity(points.len());
    if jobs == 1 {
        let backend = exact();
        results.extend(points.iter().map(|p| plan.evaluate(p, &backend)));
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = points
                .chunks(chunk)
                .map(|part| {
                    let plan = &plan;
                    scope.spawn(move || {
                        let backend = exact();
                        part.iter().map(|p| plan.evaluate(p, &backend)).collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                results.extend(h.join().expect("oracle worker panicked"));
            }
        });
    }

    let mut outcomes = Vec::with_capacity(results.len());
    let mut best: Option<(usize, Vec<f64>)> = None;
    for r in results {
        let (o, values) = r?;
        if !o.leader_objective.is_nan() {
            let better = match &best {
                None => true,
                Some((i, _)) => {
                    let cur: f64 = outcomes.get(*i).map(|b: &PointOutcome| b.leader_objective).unwrap_or(f64::INFINITY);
                    o.leader_objective < cur - 1e-9 * (1.0 + cur.abs())
                }
            };
            if better {
                best = Some((outcomes.len(), values));
            }
        }
        outcomes.push(o);
    }
    let (idx, values) = best.ok_or(OracleError::NoFeasiblePoint)?;
    let objective = outcomes[idx].leader_objective;
    let dv = DecisionValues::from_values(&plan.game.sym, &values);
    let (ely, no) = profits(&dv, sc);
    let bundle = SolutionBundle {
        case,
        status: SolveStatus::Optimal,
        gap: 0.0,
        runtime_s: started.elapsed().as_secs_f64(),
        nodes: outcomes.len() as u64,
        values: Some(dv),
        ely_profit: ely,
        no_profit: no,
        upper_objective: objective,
        lower_objective: plan.game.bp.lower_objective_value(&values),
        duals: Vec::new(),
        certificate: None,
        diagnosis: Vec::new(),
    };
    Ok(OracleResult {
        case,
        axes: plan.axes.iter().map(|a| a.name.clone()).collect(),
        best_point: outcomes[idx].point.clone(),
        objective,
        bundle,
        outcomes,
    })
}

/// Bound on how much the leader objective can move when every enumerated
/// quantity moves by one grid step: per-MW capacity costs plus the largest
/// per-MWh value of energy, summed over the axes.
pub fn grid_slack(sc: &ScenarioData, case: Case, step: f64) -> f64 {
    let k = crate::games::Coeffs::new(sc);
    let elec = k.elec.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let crc = k.crc.iter().fold(0.0f64, |m, x| m.max(*x));
    let hourly = (k.h2_price * k.eta).max(elec).max(crc).max(k.crc_plus).max(k.penalty);
    let capacity = k.c_el + k.tariff.iter().fold(0.0f64, |m, x| m.max(*x)) + k.hours as f64 * hourly;
    let per_step = match case {
        Case::Game1 => 3.0 * capacity,
        _ => capacity + 2.0 * k.hours as f64 * hourly,
    };
    step * per_step
}
