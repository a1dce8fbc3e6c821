//! Branch-and-bound MILP backend.
//!
//! LP relaxations are solved with `microlp`; this module owns the search:
//! binaries and SOS1 groups are relaxed, and violated ones are branched on by
//! fixing variables, which `microlp` re-optimizes from the parent basis with
//! the dual simplex. Node selection is best-bound with a depth-first dive
//! after every branching so incumbents appear early.
//!
//! SOS1 groups are handled either natively (one child per "side" of the
//! group, every member on that side fixed to zero) or by rewriting them into
//! indicator binaries with big-M rows before the search starts.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use log::{debug, trace};
use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOptions, SolveOutcome};
use web_time::{Duration, Instant};

use super::{
    Backend, LinExpr, LpError, ModelIR, RawSolution, Relop, Sense, SolveParams, SolveStatus,
    VarId, VarKind,
};

/// Values with magnitude at or below this count as zero for SOS1 purposes.
const SOS1_ZERO: f64 = 1e-9;
/// Binary values within this distance of 0 or 1 count as integral.
const INT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sos1Handling {
    /// Branch on SOS1 groups directly.
    Native,
    /// Rewrite each group into indicator binaries; members without a finite
    /// bound use `big_m`.
    Indicator { big_m: f64 },
}

#[derive(Clone, Debug)]
pub struct BranchAndBound {
    pub sos1: Sos1Handling,
}

impl BranchAndBound {
    pub fn native() -> Self {
        BranchAndBound {
            sos1: Sos1Handling::Native,
        }
    }

    pub fn indicator(big_m: f64) -> Self {
        BranchAndBound {
            sos1: Sos1Handling::Indicator { big_m },
        }
    }
}

impl Backend for BranchAndBound {
    fn name(&self) -> &str {
        match self.sos1 {
            Sos1Handling::Native => "bnb",
            Sos1Handling::Indicator { .. } => "bnb-indicator",
        }
    }

    fn solve(&self, model: &ModelIR, params: &SolveParams) -> Result<RawSolution, LpError> {
        let started = Instant::now();
        if model.objective().is_none() {
            return Err(LpError::MissingObjective);
        }
        let prepared: Cow<'_, ModelIR> = match self.sos1 {
            Sos1Handling::Native => Cow::Borrowed(model),
            Sos1Handling::Indicator { big_m } => Cow::Owned(expand_sos1(model, big_m)?),
        };
        let mut raw = Search::new(&prepared, params, started)?.run()?;
        raw.values.truncate(model.num_vars());
        Ok(raw)
    }
}

/// Replaces every SOS1 group with binaries `z`, rows `lo*z <= v <= hi*z` and
/// `sum(z) <= 1`.
pub fn expand_sos1(model: &ModelIR, big_m: f64) -> Result<ModelIR, LpError> {
    if !(big_m.is_finite() && big_m > 0.0) {
        return Err(LpError::NonFinite("indicator big-M".into()));
    }
    let mut out = model.clone();
    out.sos1.clear();
    for (g, group) in model.sos1_groups().iter().enumerate() {
        let mut indicators = Vec::with_capacity(group.members.len());
        for (k, &member) in group.members.iter().enumerate() {
            let var = model.var(member);
            let upper = if var.hi.is_finite() { var.hi } else { big_m };
            let lower = if var.lo.is_finite() { var.lo } else { -big_m };
            let z = out.add_binary(format!("sos1_z[{g}][{k}]"))?;
            if upper > 0.0 {
                out.add_constraint(
                    LinExpr::from(member).with_term(z, -upper),
                    Relop::Le,
                    0.0,
                    format!("sos1_hi[{}][{k}]", group.tag),
                )?;
            }
            if lower < 0.0 {
                out.add_constraint(
                    LinExpr::from(member).with_term(z, -lower),
                    Relop::Ge,
                    0.0,
                    format!("sos1_lo[{}][{k}]", group.tag),
                )?;
            }
            indicators.push(z);
        }
        out.add_constraint(
            LinExpr::sum(indicators),
            Relop::Le,
            1.0,
            format!("sos1_pick[{}]", group.tag),
        )?;
    }
    Ok(out)
}

type Fix = (usize, f64);

struct OpenNode {
    bound: f64,
    depth: usize,
    seq: u64,
    /// Warm-start state; `None` once the memory budget is spent, in which
    /// case the node is solved cold from `path`.
    parent: Option<Rc<microlp::Solution>>,
    fixes: Vec<Fix>,
    path: Rc<Vec<Fix>>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    // BinaryHeap pops the greatest element: lowest bound first, then deepest,
    // then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

enum NodeLp {
    Solved(microlp::Solution),
    Infeasible,
    Limit,
}

enum Branch {
    /// Each child fixes the listed variables; the first child is dived into.
    Children(Vec<Vec<Fix>>),
    Integral,
}

struct Search<'a> {
    model: &'a ModelIR,
    params: &'a SolveParams,
    started: Instant,
    deadline: Option<Instant>,
    /// `+1` for minimization, `-1` for maximization; the relaxation always
    /// minimizes `sign * objective`.
    sign: f64,
    obj_constant: f64,
    problem: Problem,
    lp_vars: Vec<microlp::Variable>,
    binaries: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    /// Lowest bound among nodes discarded only because of the gap tolerance.
    gap_pruned: f64,
    nodes: u64,
    seq: u64,
    /// Open nodes allowed to hold a warm-start state, and how many do.
    warm_slots: usize,
    warm_open: usize,
    /// Set once infinite bounds have been replaced by `RAY_BOX`.
    boxed: bool,
}

/// Memory the open nodes' warm-start states may use.
const WARM_BUDGET_BYTES: usize = 1 << 30;

/// Rough size of one simplex state: dense work vectors over rows and
/// columns plus factor and matrix copies proportional to the nonzeros.
fn warm_slots(model: &ModelIR) -> usize {
    let nnz: usize = model.constraints().iter().map(|c| c.expr.terms().count()).sum();
    let dims = model.vars().len() + model.constraints().len();
    let per_state = 128 * dims + 64 * nnz + 4096;
    (WARM_BUDGET_BYTES / per_state).clamp(8, 1 << 16)
}

/// Translates the model into a minimization over the given column bounds.
fn build_problem(model: &ModelIR, sign: f64, bounds: &[(f64, f64)]) -> (Problem, Vec<microlp::Variable>) {
    let objective = model.objective().expect("objective checked by the caller");
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let lp_vars = bounds
        .iter()
        .enumerate()
        .map(|(j, &b)| problem.add_var(sign * objective.expr.coeff(VarId(j)), b))
        .collect::<Vec<_>>();
    for c in model.constraints() {
        if c.expr.is_empty() {
            continue;
        }
        let op = match c.relop {
            Relop::Le => ComparisonOp::Le,
            Relop::Eq => ComparisonOp::Eq,
            Relop::Ge => ComparisonOp::Ge,
        };
        problem.add_constraint(
            c.expr.terms().map(|(v, coeff)| (lp_vars[v.index()], coeff)),
            op,
            c.rhs - c.expr.constant_part(),
        );
    }
    (problem, lp_vars)
}

/// Box applied to infinite bounds when the simplex reports an unbounded
/// root on a large model. A relaxed optimum touching it is a real ray.
const RAY_BOX: f64 = 1e7;

impl<'a> Search<'a> {
    fn new(model: &'a ModelIR, params: &'a SolveParams, started: Instant) -> Result<Self, LpError> {
        let objective = model.objective().ok_or(LpError::MissingObjective)?;
        let sign = match objective.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let bounds: Vec<(f64, f64)> = model.vars().iter().map(|v| (v.lo, v.hi)).collect();
        let (problem, lp_vars) = build_problem(model, sign, &bounds);
        let binaries = model
            .vars()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
            .collect();
        let deadline = params
            .time_limit_s
            .map(|s| started + Duration::from_secs_f64(s.max(0.0)));
        Ok(Search {
            model,
            params,
            started,
            deadline,
            sign,
            obj_constant: objective.expr.constant_part(),
            problem,
            lp_vars,
            binaries,
            incumbent: None,
            gap_pruned: f64::INFINITY,
            nodes: 0,
            seq: 0,
            warm_slots: warm_slots(model),
            warm_open: 0,
            boxed: false,
        })
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let cap = |b: f64| if self.boxed { b.clamp(-RAY_BOX, RAY_BOX) } else { b };
        self.model.vars().iter().map(|v| (cap(v.lo), cap(v.hi))).collect()
    }

    /// Retries an unbounded root with boxed free columns. The simplex can
    /// misreport unboundedness on big degenerate models; a boxed optimum
    /// away from the box settles it.
    fn solve_boxed_root(&mut self) -> Result<NodeLp, LpError> {
        debug!("root reported unbounded; retrying with columns boxed at {RAY_BOX:e}");
        self.boxed = true;
        let (problem, lp_vars) = build_problem(self.model, self.sign, &self.bounds());
        self.problem = problem;
        self.lp_vars = lp_vars;
        let node = self.solve_fresh(&[])?;
        if let NodeLp::Solved(s) = &node {
            let touches = self.model.vars().iter().zip(&self.lp_vars).any(|(v, &x)| {
                let val = s[x];
                (v.hi.is_infinite() && val >= 0.5 * RAY_BOX) || (v.lo.is_infinite() && val <= -0.5 * RAY_BOX)
            });
            if touches {
                return Err(LpError::Backend("unbounded".into()));
            }
        }
        Ok(node)
    }

    fn elapsed(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
            || self.params.node_limit.is_some_and(|n| self.nodes >= n)
    }

    fn lp_options(&self) -> SolveOptions {
        let mut opts = SolveOptions::default();
        opts.time_limit = self
            .deadline
            .map(|d| d.saturating_duration_since(Instant::now()));
        opts
    }

    fn solve_fresh(&self, path: &[Fix]) -> Result<NodeLp, LpError> {
        let mut problem = self.problem.clone();
        if !path.is_empty() {
            // Rebuild with the branching fixes as bounds.
            let mut bounds = self.bounds();
            for &(j, val) in path {
                bounds[j] = (val, val);
            }
            problem = build_problem(self.model, self.sign, &bounds).0;
        }
        match problem.solve_with(self.lp_options()) {
            Ok(SolveOutcome::Solution(s)) => Ok(NodeLp::Solved(s)),
            Ok(SolveOutcome::Interrupted(_)) => Ok(NodeLp::Limit),
            Err(microlp::Error::Infeasible) => Ok(NodeLp::Infeasible),
            Err(microlp::Error::Unbounded) if path.is_empty() => Err(LpError::Backend("unbounded".into())),
            Err(microlp::Error::Unbounded) => Ok(NodeLp::Infeasible),
            Err(e) => Err(LpError::Backend(e.to_string())),
        }
    }

    /// Re-optimizes `parent` after applying `fixes`, falling back to a cold
    /// solve of the whole `path` if the warm start fails numerically.
    fn realize(&self, parent: &microlp::Solution, fixes: &[Fix], path: &[Fix]) -> Result<NodeLp, LpError> {
        let mut sol = parent.clone();
        for &(j, val) in fixes {
            match sol.fix_var(self.lp_vars[j], val) {
                Ok(SolveOutcome::Solution(s)) => sol = s,
                Ok(SolveOutcome::Interrupted(_)) => return Ok(NodeLp::Limit),
                Err(microlp::Error::Infeasible) => return Ok(NodeLp::Infeasible),
                Err(e) => {
                    debug!("warm start failed ({e}); cold solve at depth {}", path.len());
                    return self.solve_fresh(path);
                }
            }
        }
        Ok(NodeLp::Solved(sol))
    }

    fn values(&self, sol: &microlp::Solution) -> Vec<f64> {
        self.lp_vars
            .iter()
            .zip(self.model.vars())
            .map(|(&v, var)| sol.var_value_raw(v).clamp(var.lo, var.hi))
            .collect()
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((obj, _)) => obj - self.prune_tol(*obj),
            None => f64::INFINITY,
        }
    }

    fn prune_tol(&self, incumbent: f64) -> f64 {
        let scale = (self.sign * incumbent + self.obj_constant).abs().max(1.0);
        (self.params.rel_gap * scale).max(1e-9 * scale)
    }

    fn branch(&self, values: &[f64]) -> Branch {
        let mut best_bin: Option<(f64, usize)> = None;
        for &j in &self.binaries {
            let frac = values[j].min(1.0 - values[j]);
            if frac > INT_TOL && best_bin.is_none_or(|(f, _)| frac > f) {
                best_bin = Some((frac, j));
            }
        }
        if let Some((_, j)) = best_bin {
            let (first, second) = if values[j] >= 0.5 { (1.0, 0.0) } else { (0.0, 1.0) };
            return Branch::Children(vec![vec![(j, first)], vec![(j, second)]]);
        }

        let mut best_group: Option<(f64, usize)> = None;
        for (g, group) in self.model.sos1_groups().iter().enumerate() {
            let mut top = [0.0f64; 2];
            let mut nonzero = 0;
            for m in &group.members {
                let a = values[m.index()].abs();
                if a > SOS1_ZERO {
                    nonzero += 1;
                }
                if a > top[0] {
                    top[1] = top[0];
                    top[0] = a;
                } else if a > top[1] {
                    top[1] = a;
                }
            }
            if nonzero >= 2 {
                let score = top[0] * top[1];
                if best_group.is_none_or(|(s, _)| score > s) {
                    best_group = Some((score, g));
                }
            }
        }
        let Some((_, g)) = best_group else {
            return Branch::Integral;
        };
        let members = &self.model.sos1_groups()[g].members;
        let mass: Vec<f64> = members.iter().map(|m| values[m.index()].abs()).collect();
        let total: f64 = mass.iter().sum();
        // Cut between two nonzero members so each child zeroes a positive
        // value; splitting beside members already fixed at zero would repeat
        // the parent.
        let nonzero: Vec<usize> = (0..members.len()).filter(|&i| mass[i] > SOS1_ZERO).collect();
        let mut k = 1;
        let mut acc = mass[nonzero[0]];
        while k < nonzero.len() - 1 && acc < 0.5 * total {
            acc += mass[nonzero[k]];
            k += 1;
        }
        let split = nonzero[k];
        let left: Vec<Fix> = members[..split].iter().map(|m| (m.index(), 0.0)).collect();
        let right: Vec<Fix> = members[split..].iter().map(|m| (m.index(), 0.0)).collect();
        let left_mass: f64 = mass[..split].iter().sum();
        // Zero the lighter side first.
        if left_mass <= total - left_mass {
            Branch::Children(vec![left, right])
        } else {
            Branch::Children(vec![right, left])
        }
    }

    fn run(mut self) -> Result<RawSolution, LpError> {
        for c in self.model.constraints().iter().filter(|c| c.expr.is_empty()) {
            if c.violation(&[]).unwrap_or(0.0) > super::FEAS_TOL {
                debug!("constant row `{}` is infeasible", c.tag);
                return Ok(RawSolution::without_point(SolveStatus::Infeasible, self.elapsed(), 0));
            }
        }
        let first = match self.solve_fresh(&[]) {
            Err(LpError::Backend(msg)) if msg == "unbounded" => self.solve_boxed_root(),
            other => other,
        };
        let root = match first {
            Ok(NodeLp::Solved(s)) => s,
            Ok(NodeLp::Infeasible) => {
                return Ok(RawSolution::without_point(SolveStatus::Infeasible, self.elapsed(), 1))
            }
            Ok(NodeLp::Limit) => {
                return Ok(RawSolution::without_point(SolveStatus::Limit, self.elapsed(), 1))
            }
            Err(LpError::Backend(msg)) if msg == "unbounded" => {
                return Ok(RawSolution::without_point(SolveStatus::Unbounded, self.elapsed(), 1))
            }
            Err(e) => return Err(e),
        };
        self.nodes = 1;

        let mut open: BinaryHeap<OpenNode> = BinaryHeap::new();
        let mut current: Option<(microlp::Solution, usize, Rc<Vec<Fix>>)> =
            Some((root, 0, Rc::new(Vec::new())));
        let mut hit_limit = false;

        loop {
            if self.out_of_time() {
                hit_limit = true;
                break;
            }
            let (sol, depth, path) = match current.take() {
                Some(node) => node,
                None => {
                    let Some(node) = open.pop() else { break };
                    if node.parent.is_some() {
                        self.warm_open -= 1;
                    }
                    if node.bound >= self.cutoff() {
                        self.gap_pruned = self.gap_pruned.min(node.bound);
                        continue;
                    }
                    let mut path = (*node.path).clone();
                    path.extend_from_slice(&node.fixes);
                    let lp = match &node.parent {
                        Some(p) => self.realize(p, &node.fixes, &path)?,
                        None => self.solve_fresh(&path)?,
                    };
                    match lp {
                        NodeLp::Solved(s) => {
                            self.nodes += 1;
                            (s, node.depth, Rc::new(path))
                        }
                        NodeLp::Infeasible => {
                            self.nodes += 1;
                            continue;
                        }
                        NodeLp::Limit => {
                            self.warm_open += usize::from(node.parent.is_some());
                            open.push(node);
                            hit_limit = true;
                            break;
                        }
                    }
                }
            };

            let bound = sol.objective();
            if bound >= self.cutoff() {
                if bound < self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0) {
                    self.gap_pruned = self.gap_pruned.min(bound);
                }
                continue;
            }
            let values = self.values(&sol);
            match self.branch(&values) {
                Branch::Integral => {
                    let better = self.incumbent.as_ref().is_none_or(|(obj, _)| bound < *obj);
                    if better {
                        trace!("incumbent {:.6} at node {}", self.sign * bound + self.obj_constant, self.nodes);
                        self.incumbent = Some((bound, values));
                    }
                }
                Branch::Children(children) => {
                    let parent = Rc::new(sol);
                    let mut children = children.into_iter();
                    let dive = children.next().expect("at least two children");
                    for fixes in children {
                        self.seq += 1;
                        let warm = self.warm_open < self.warm_slots;
                        self.warm_open += usize::from(warm);
                        open.push(OpenNode {
                            bound,
                            depth: depth + 1,
                            seq: self.seq,
                            parent: warm.then(|| Rc::clone(&parent)),
                            fixes,
                            path: Rc::clone(&path),
                        });
                    }
                    let mut dive_path = (*path).clone();
                    dive_path.extend_from_slice(&dive);
                    match self.realize(&parent, &dive, &dive_path)? {
                        NodeLp::Solved(s) => {
                            self.nodes += 1;
                            current = Some((s, depth + 1, Rc::new(dive_path)));
                        }
                        NodeLp::Infeasible => self.nodes += 1,
                        NodeLp::Limit => {
                            self.seq += 1;
                            self.warm_open += 1;
                            open.push(OpenNode {
                                bound,
                                depth: depth + 1,
                                seq: self.seq,
                                parent: Some(parent),
                                fixes: dive,
                                path,
                            });
                            hit_limit = true;
                            break;
                        }
                    }
                }
            }
        }

        let wall = self.elapsed();
        let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let Some((inc, values)) = self.incumbent.take() else {
            let status = if hit_limit { SolveStatus::Limit } else { SolveStatus::Infeasible };
            return Ok(RawSolution::without_point(status, wall, self.nodes));
        };
        let bound_internal = inc.min(open_bound).min(self.gap_pruned);
        let objective = self.sign * inc + self.obj_constant;
        let bound = self.sign * bound_internal + self.obj_constant;
        let rel_gap = ((inc - bound_internal) / objective.abs().max(1.0)).max(0.0);
        let status = if hit_limit && rel_gap > self.params.rel_gap {
            SolveStatus::Limit
        } else if rel_gap <= 1e-9 {
            SolveStatus::Optimal
        } else {
            SolveStatus::GapOptimal
        };
        debug!(
            "bnb: {} nodes, objective {objective:.6}, gap {rel_gap:.2e}, {wall:.2}s",
            self.nodes
        );
        Ok(RawSolution {
            status,
            values,
            objective,
            bound,
            rel_gap,
            wall_time_s: wall,
            nodes: self.nodes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve, Sense};

    fn params() -> SolveParams {
        SolveParams {
            rel_gap: 0.0,
            time_limit_s: Some(30.0),
            node_limit: None,
        }
    }

    #[test]
    fn min_x_subject_to_lower_bound() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_constraint(LinExpr::from(x), Relop::Ge, 3.0, "lb").unwrap();
        m.set_objective(Sense::Minimize, LinExpr::from(x)).unwrap();
        let s = solve(&m, &BranchAndBound::native(), 1e-3, None).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.values[0] - 3.0).abs() < 1e-9);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert_eq!(s.rel_gap, 0.0);
    }

    #[test]
    fn max_sum_with_box() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 0.0, 3.0).unwrap();
        let y = m.add_continuous("y", 0.0, 3.0).unwrap();
        m.add_constraint(LinExpr::sum([x, y]), Relop::Le, 4.0, "cap").unwrap();
        m.set_objective(Sense::Maximize, LinExpr::sum([x, y])).unwrap();
        let s = BranchAndBound::native().solve(&m, &params()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.add_constraint(LinExpr::from(x), Relop::Le, -1.0, "neg").unwrap();
        m.set_objective(Sense::Minimize, LinExpr::from(x)).unwrap();
        let s = BranchAndBound::native().solve(&m, &params()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(!s.has_point());
    }

    #[test]
    fn constant_row_infeasibility_surfaces_at_solve() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.add_constraint(LinExpr::new(), Relop::Le, -1.0, "zero_le_minus_one").unwrap();
        m.set_objective(Sense::Minimize, LinExpr::from(x)).unwrap();
        let s = BranchAndBound::native().solve(&m, &params()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
        m.set_objective(Sense::Maximize, LinExpr::from(x)).unwrap();
        let s = BranchAndBound::native().solve(&m, &params()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn binary_knapsack() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 4  -> a = c = 1 (value 8)
        let mut m = ModelIR::new();
        let a = m.add_binary("a").unwrap();
        let b = m.add_binary("b").unwrap();
        let c = m.add_binary("c").unwrap();
        let w = LinExpr::new().with_term(a, 2.0).with_term(b, 3.0).with_term(c, 1.0);
        m.add_constraint(w, Relop::Le, 4.0, "weight").unwrap();
        let v = LinExpr::new().with_term(a, 5.0).with_term(b, 4.0).with_term(c, 3.0);
        m.set_objective(Sense::Maximize, v).unwrap();
        let s = BranchAndBound::native().solve(&m, &params()).unwrap();
        assert!(s.status.is_success());
        assert!((s.objective - 8.0).abs() < 1e-9);
        assert_eq!(s.values, vec![1.0, 0.0, 1.0]);
    }

    fn sos1_model() -> ModelIR {
        // max x + y with x + y <= 3, x <= 2, y <= 2 and SOS1{x, y}: the best
        // single nonzero gives 2 (relaxation would give 3).
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 0.0, 2.0).unwrap();
        let y = m.add_continuous("y", 0.0, 2.0).unwrap();
        m.add_constraint(LinExpr::sum([x, y]), Relop::Le, 3.0, "cap").unwrap();
        m.add_sos1(vec![x, y], "pair").unwrap();
        m.set_objective(Sense::Maximize, LinExpr::new().with_term(x, 1.0).with_term(y, 1.0)).unwrap();
        m
    }

    #[test]
    fn native_sos1_branching() {
        let s = BranchAndBound::native().solve(&sos1_model(), &params()).unwrap();
        assert!(s.status.is_success());
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!(s.values.iter().filter(|v| v.abs() > 1e-6).count() <= 1);
    }

    #[test]
    fn indicator_sos1_matches_native() {
        let m = sos1_model();
        let s = BranchAndBound::indicator(10.0).solve(&m, &params()).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert_eq!(s.values.len(), m.num_vars());
    }

    #[test]
    fn three_member_sos1_group() {
        // max 3x + 2y + 4z, x + y + z <= 5, each <= 3, SOS1{x,y,z} -> z = 3, value 12
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 0.0, 3.0).unwrap();
        let y = m.add_continuous("y", 0.0, 3.0).unwrap();
        let z = m.add_continuous("z", 0.0, 3.0).unwrap();
        m.add_constraint(LinExpr::sum([x, y, z]), Relop::Le, 5.0, "cap").unwrap();
        m.add_sos1(vec![x, y, z], "triple").unwrap();
        m.set_objective(
            Sense::Maximize,
            LinExpr::new().with_term(x, 3.0).with_term(y, 2.0).with_term(z, 4.0),
        )
        .unwrap();
        let s = BranchAndBound::native().solve(&m, &params()).unwrap();
        assert!((s.objective - 12.0).abs() < 1e-9, "{s:?}");
    }

    #[test]
    fn objective_constant_is_reported() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 1.0, 2.0).unwrap();
        m.set_objective(Sense::Minimize, LinExpr::from(x) + LinExpr::constant(10.0)).unwrap();
        let s = BranchAndBound::native().solve(&m, &params()).unwrap();
        assert!((s.objective - 11.0).abs() < 1e-9);
    }
}
