//! KKT reformulation of the follower LP.
//!
//! Every follower row is brought to the form `a·y + g·x <= h` (lower
//! variables `y`, couplings `x`) or `a·y = h` for equalities without
//! couplings; coupled equalities are split into two inequalities so that
//! every dual multiplying a coupling term is sign-constrained. Finite bounds
//! of lower variables become rows too. With the Lagrangian
//! `c·y + Σ μ·(a·y + g·x − h)`, stationarity reads `c + Σ μ·a = 0`.

use std::fmt::Write as _;

use super::{BilevelProblem, ReformError};
use crate::lp::{ConstraintId, LinExpr, ModelIR, Relop, VarId};

#[derive(Clone, Debug, PartialEq)]
pub struct DualRow {
    pub tag: String,
    /// Tag of the follower row or bound the dual belongs to.
    pub source: String,
    pub dual: VarId,
    /// `true` for inequality rows (dual ≥ 0), `false` for free duals.
    pub inequality: bool,
    pub lower_part: LinExpr,
    pub coupling_part: LinExpr,
    pub rhs: f64,
}

impl DualRow {
    /// `h − a·y − g·x`.
    pub fn slack_expr(&self) -> LinExpr {
        let mut e = LinExpr::constant(self.rhs);
        e.add_expr(&self.lower_part, -1.0);
        e.add_expr(&self.coupling_part, -1.0);
        e
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplementarityPair {
    pub tag: String,
    pub slack: LinExpr,
    pub dual: VarId,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReformulationArtifacts {
    pub duals: Vec<DualRow>,
    pub pairs: Vec<ComplementarityPair>,
    pub stationarity: Vec<ConstraintId>,
    pub strong_duality: Option<ConstraintId>,
    /// Follower objective restricted to lower variables.
    pub lower_objective: LinExpr,
    /// Follower objective terms in coupling variables (constant to the
    /// follower, excluded from both sides of the duality comparison).
    pub coupling_objective: LinExpr,
    pub linearized: bool,
    /// Source tag → generated row tags.
    pub trace: Vec<(String, Vec<String>)>,
}

/// Single-level model plus the bookkeeping that produced it.
#[derive(Clone, Debug)]
pub struct KktModel {
    pub model: ModelIR,
    pub artifacts: ReformulationArtifacts,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Linearization {
    Sos1,
    BigM(f64),
}

fn push_trace(trace: &mut Vec<(String, Vec<String>)>, source: &str, tag: String) {
    match trace.iter_mut().find(|(s, _)| s == source) {
        Some((_, tags)) => tags.push(tag),
        None => trace.push((source.to_string(), vec![tag])),
    }
}

/// Builds upper objective + upper rows + follower primal rows + stationarity
/// with sign-constrained duals. Complementarity pairs are recorded but not
/// yet linearized.
pub fn derive_kkt(bp: &BilevelProblem) -> Result<KktModel, ReformError> {
    if let Some(&b) = bp.lower_binaries().first() {
        return Err(ReformError::LowerHasBinaries(bp.model.var(b).name.clone()));
    }
    let mut model = bp.model.clone();
    let mut art = ReformulationArtifacts {
        lower_objective: bp.lower.objective.filter_vars(|v| bp.is_lower(v)),
        coupling_objective: bp.lower.objective.filter_vars(|v| !bp.is_lower(v)),
        ..Default::default()
    };
    art.lower_objective.add_constant(-art.lower_objective.constant_part());

    for c in &bp.lower.constraints {
        model.push_constraint(c.clone())?;
    }

    // Normalized rows: (tag, source, inequality, a, g, h).
    let mut rows: Vec<(String, String, bool, LinExpr, LinExpr, f64)> = Vec::new();
    for c in &bp.lower.constraints {
        let mut a = c.expr.filter_vars(|v| bp.is_lower(v));
        a.add_constant(-a.constant_part());
        let mut g = c.expr.filter_vars(|v| !bp.is_lower(v));
        g.add_constant(-g.constant_part());
        let h = c.rhs - c.expr.constant_part();
        match c.relop {
            Relop::Le => rows.push((c.tag.clone(), c.tag.clone(), true, a, g, h)),
            Relop::Ge => rows.push((c.tag.clone(), c.tag.clone(), true, -a, -g, -h)),
            Relop::Eq if g.is_empty() => rows.push((c.tag.clone(), c.tag.clone(), false, a, g, h)),
            Relop::Eq => {
                rows.push((format!("{}#le", c.tag), c.tag.clone(), true, a.clone(), g.clone(), h));
                rows.push((format!("{}#ge", c.tag), c.tag.clone(), true, -a, -g, -h));
            }
        }
    }
    for &y in &bp.lower.vars {
        let var = bp.model.var(y).clone();
        let bound = format!("bound[{}]", var.name);
        if var.lo.is_finite() {
            rows.push((format!("lb[{}]", var.name), bound.clone(), true, -LinExpr::from(y), LinExpr::new(), -var.lo));
        }
        if var.hi.is_finite() {
            rows.push((format!("ub[{}]", var.name), bound, true, LinExpr::from(y), LinExpr::new(), var.hi));
        }
    }

    for (tag, source, inequality, a, g, h) in rows {
        let lo = if inequality { 0.0 } else { f64::NEG_INFINITY };
        let dual = model.add_continuous(format!("dual[{tag}]"), lo, f64::INFINITY)?;
        push_trace(&mut art.trace, &source, format!("dual[{tag}]"));
        let row = DualRow {
            tag: tag.clone(),
            source,
            dual,
            inequality,
            lower_part: a,
            coupling_part: g,
            rhs: h,
        };
        if inequality {
            art.pairs.push(ComplementarityPair {
                tag,
                slack: row.slack_expr(),
                dual,
            });
        }
        art.duals.push(row);
    }

    for &y in &bp.lower.vars {
        let mut expr = LinExpr::new();
        for row in &art.duals {
            let a = row.lower_part.coeff(y);
            if a != 0.0 {
                expr.add_term(row.dual, a);
            }
        }
        let name = &bp.model.var(y).name;
        let tag = format!("stationarity[{name}]");
        let id = model.add_constraint(expr, Relop::Eq, -art.lower_objective.coeff(y), tag.clone())?;
        push_trace(&mut art.trace, &format!("var[{name}]"), tag);
        art.stationarity.push(id);
    }
    Ok(KktModel { model, artifacts: art })
}

/// Largest and smallest value of `expr` over the variable box.
fn expr_range(model: &ModelIR, expr: &LinExpr) -> (f64, f64) {
    let mut lo = expr.constant_part();
    let mut hi = expr.constant_part();
    for (v, c) in expr.terms() {
        let var = model.var(v);
        let (a, b) = (c * var.lo, c * var.hi);
        lo += a.min(b);
        hi += a.max(b);
    }
    (if lo.is_nan() { f64::NEG_INFINITY } else { lo }, if hi.is_nan() { f64::INFINITY } else { hi })
}

/// Adds the complementarity restrictions: an SOS1 group per pair, or a
/// binary with two big-M rows per pair.
pub fn linearize_complementarity(kkt: &mut KktModel, method: Linearization) -> Result<(), ReformError> {
    if kkt.artifacts.linearized {
        return Err(ReformError::AlreadyLinearized);
    }
    if let Linearization::BigM(m) = method {
        if !(m.is_finite() && m > 0.0) {
            return Err(ReformError::InvalidBigM(m));
        }
    }
    let KktModel { model, artifacts } = kkt;
    for pair in &artifacts.pairs {
        let tag = &pair.tag;
        let source = artifacts
            .duals
            .iter()
            .find(|d| d.dual == pair.dual)
            .map(|d| d.source.clone())
            .unwrap_or_else(|| tag.clone());
        match method {
            Linearization::Sos1 => {
                let direct = (pair.slack.len() == 1 && pair.slack.constant_part() == 0.0)
                    .then(|| pair.slack.terms().next().filter(|&(_, c)| c == 1.0).map(|(v, _)| v))
                    .flatten();
                let slack_var = match direct {
                    Some(v) => v,
                    None => {
                        let (_, hi) = expr_range(model, &pair.slack);
                        let s = model.add_continuous(format!("slack[{tag}]"), 0.0, hi.max(0.0))?;
                        let link = format!("slack_link[{tag}]");
                        model.add_constraint(LinExpr::from(s) - pair.slack.clone(), Relop::Eq, 0.0, link.clone())?;
                        push_trace(&mut artifacts.trace, &source, link);
                        s
                    }
                };
                let group = format!("compl[{tag}]");
                model.add_sos1(vec![slack_var, pair.dual], group.clone())?;
                push_trace(&mut artifacts.trace, &source, group);
            }
            Linearization::BigM(m) => {
                let z = model.add_binary(format!("z[{tag}]"))?;
                let slack_row = format!("compl_slack[{tag}]");
                model.add_constraint(pair.slack.clone().with_term(z, -m), Relop::Le, 0.0, slack_row.clone())?;
                let dual_row = format!("compl_dual[{tag}]");
                model.add_constraint(LinExpr::from(pair.dual).with_term(z, m), Relop::Le, m, dual_row.clone())?;
                push_trace(&mut artifacts.trace, &source, slack_row);
                push_trace(&mut artifacts.trace, &source, dual_row);
            }
        }
    }
    artifacts.linearized = true;
    Ok(())
}

/// Adds `c·y <= dual objective`, tagged `strong-duality`.
///
/// The products `μ·g·x` are replaced by `μ·g·x̄` with `x̄` the upper bound of
/// `x` when `g > 0` and its lower bound when `g < 0`. Since `μ >= 0` this only
/// enlarges the right-hand side, so the row stays valid for every KKT point
/// and is exact whenever the couplings sit at those bounds.
pub fn add_strong_duality_cut(kkt: &mut KktModel) -> Result<ConstraintId, ReformError> {
    let KktModel { model, artifacts } = kkt;
    let mut expr = artifacts.lower_objective.clone();
    for row in &artifacts.duals {
        let mut coeff = row.rhs;
        for (x, g) in row.coupling_part.terms() {
            let var = model.var(x);
            let bound = if g > 0.0 { var.hi } else { var.lo };
            if !bound.is_finite() {
                return Err(ReformError::UnboundedCoupling(var.name.clone()));
            }
            coeff -= g * bound;
        }
        expr.add_term(row.dual, coeff);
    }
    let id = model.add_constraint(expr, Relop::Le, 0.0, "strong-duality")?;
    artifacts.strong_duality = Some(id);
    push_trace(&mut artifacts.trace, "objective", "strong-duality".into());
    Ok(id)
}

/// Optimality evidence for the follower at a point of the reformulation.
#[derive(Clone, Debug, PartialEq)]
pub struct KktCertificate {
    pub max_complementarity: f64,
    pub worst_pair: Option<String>,
    /// Largest stationarity residual `|c + Σ μ·a|`.
    pub max_stationarity: f64,
    /// Most negative dual among inequality rows (zero if none).
    pub min_dual: f64,
    pub primal_objective: f64,
    /// Exact (bilinear) dual objective `−Σ μ·(h − g·x)`.
    pub dual_objective: f64,
}

impl KktCertificate {
    pub fn duality_gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
    }

    pub fn relative_duality_gap(&self) -> f64 {
        self.duality_gap() / (1.0 + self.primal_objective.abs())
    }
}

/// Evaluates complementarity, stationarity and duality at `values`.
pub fn certify(art: &ReformulationArtifacts, values: &[f64]) -> KktCertificate {
    let val = |e: &LinExpr| e.eval_dense(values).unwrap_or(f64::NAN);
    let mut cert = KktCertificate {
        max_complementarity: 0.0,
        worst_pair: None,
        max_stationarity: 0.0,
        min_dual: 0.0,
        primal_objective: val(&art.lower_objective),
        dual_objective: 0.0,
    };
    for pair in &art.pairs {
        let r = (val(&pair.slack) * values[pair.dual.index()]).abs();
        if r > cert.max_complementarity {
            cert.max_complementarity = r;
            cert.worst_pair = Some(pair.tag.clone());
        }
    }
    let mut stationarity = art.lower_objective.clone();
    stationarity.add_constant(-stationarity.constant_part());
    let mut grads: std::collections::BTreeMap<VarId, f64> =
        stationarity.terms().collect();
    for row in &art.duals {
        let mu = values[row.dual.index()];
        if row.inequality {
            cert.min_dual = cert.min_dual.min(mu);
        }
        cert.dual_objective -= mu * (row.rhs - val(&row.coupling_part));
        for (y, a) in row.lower_part.terms() {
            *grads.entry(y).or_insert(0.0) += mu * a;
        }
    }
    cert.max_stationarity = grads.values().fold(0.0, |m, g| m.max(g.abs()));
    cert
}

/// Text report mapping each follower row, bound and variable to the rows
/// generated from it.
pub fn trace_report(art: &ReformulationArtifacts) -> String {
    let mut out = String::new();
    for (source, tags) in &art.trace {
        let _ = writeln!(out, "{source} -> {}", tags.join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilevel::BilevelProblem;
    use crate::lp::{solve, BranchAndBound, Sense, VarKind};

    /// Follower `min −y  s.t.  y <= x, y >= 0`; leader `min x − 2y` with
    /// `x ∈ [0, 4]`, `x >= 1`.
    fn toy() -> (BilevelProblem, VarId, VarId) {
        let mut bp = BilevelProblem::new();
        let x = bp.add_upper_var("x", VarKind::Continuous, 0.0, 4.0).unwrap();
        let y = bp.add_lower_var("y", VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
        bp.add_upper_constraint(LinExpr::from(x), Relop::Ge, 1.0, "x_min").unwrap();
        bp.add_lower_constraint(LinExpr::from(y) - LinExpr::from(x), Relop::Le, 0.0, "cap").unwrap();
        bp.set_lower_objective(-LinExpr::from(y)).unwrap();
        bp.set_upper_objective(Sense::Minimize, LinExpr::from(x) - LinExpr::term(y, 2.0)).unwrap();
        (bp, x, y)
    }

    #[test]
    fn hand_derived_kkt_of_min_minus_y() {
        let (bp, x, y) = toy();
        let kkt = derive_kkt(&bp).unwrap();
        let art = &kkt.artifacts;
        assert_eq!(art.duals.len(), 2);
        let mu1 = art.duals[0].dual;
        let mu2 = art.duals[1].dual;
        // stationarity: −1 + μ1 − μ2 = 0
        let st = kkt.model.constraint(art.stationarity[0]);
        assert_eq!(st.relop, Relop::Eq);
        assert_eq!(st.rhs, 1.0);
        assert_eq!(st.expr.coeff(mu1), 1.0);
        assert_eq!(st.expr.coeff(mu2), -1.0);
        // pairs: (x − y, μ1) and (y, μ2)
        assert_eq!(art.pairs[0].slack, LinExpr::from(x) - LinExpr::from(y));
        assert_eq!(art.pairs[1].slack, LinExpr::from(y));
        assert_eq!(kkt.model.var(mu1).lo, 0.0);
    }

    #[test]
    fn toy_bilevel_solves_to_follower_optimum() {
        let (bp, x, y) = toy();
        let mut kkt = derive_kkt(&bp).unwrap();
        linearize_complementarity(&mut kkt, Linearization::Sos1).unwrap();
        add_strong_duality_cut(&mut kkt).unwrap();
        let s = solve(&kkt.model, &BranchAndBound::native(), 1e-9, Some(10.0)).unwrap();
        // follower sets y = x; leader minimizes x − 2x → x = 4
        assert!((s.values[x.index()] - 4.0).abs() < 1e-7);
        assert!((s.values[y.index()] - 4.0).abs() < 1e-7);
        let cert = certify(&kkt.artifacts, &s.values);
        assert!(cert.max_complementarity < 1e-7);
        assert!(cert.duality_gap() < 1e-7);
    }

    #[test]
    fn strong_duality_row_for_toy() {
        // Both rows have h = 0 and the coupling enters with g = −1, so the
        // dual side uses the lower bound x = 0 and the row reduces to −y <= 0.
        let (bp, _, y) = toy();
        let mut kkt = derive_kkt(&bp).unwrap();
        let id = add_strong_duality_cut(&mut kkt).unwrap();
        let row = kkt.model.constraint(id);
        assert_eq!(row.tag, "strong-duality");
        assert_eq!(row.expr.coeff(y), -1.0);
        assert_eq!(row.expr.len(), 1);
    }

    #[test]
    fn empty_lower_level() {
        let mut bp = BilevelProblem::new();
        let x = bp.add_upper_var("x", VarKind::Continuous, 0.0, 1.0).unwrap();
        bp.set_upper_objective(Sense::Minimize, LinExpr::from(x)).unwrap();
        let mut kkt = derive_kkt(&bp).unwrap();
        assert!(kkt.artifacts.duals.is_empty());
        assert!(kkt.artifacts.stationarity.is_empty());
        linearize_complementarity(&mut kkt, Linearization::Sos1).unwrap();
        let id = add_strong_duality_cut(&mut kkt).unwrap();
        assert!(kkt.model.constraint(id).expr.is_empty());
    }

    #[test]
    fn bigm_adds_two_rows_and_a_binary_per_pair() {
        let (bp, _, _) = toy();
        let mut kkt = derive_kkt(&bp).unwrap();
        let (nv, nc) = (kkt.model.num_vars(), kkt.model.num_constraints());
        linearize_complementarity(&mut kkt, Linearization::BigM(100.0)).unwrap();
        assert_eq!(kkt.model.num_vars(), nv + 2);
        assert_eq!(kkt.model.num_constraints(), nc + 4);
        assert!(kkt.model.sos1_groups().is_empty());
    }

    #[test]
    fn bigm_requires_finite_m() {
        let (bp, _, _) = toy();
        let mut kkt = derive_kkt(&bp).unwrap();
        assert!(linearize_complementarity(&mut kkt, Linearization::BigM(f64::INFINITY)).is_err());
    }

    #[test]
    fn sos1_reuses_plain_variable_slacks() {
        let (bp, _, _) = toy();
        let mut kkt = derive_kkt(&bp).unwrap();
        let nv = kkt.model.num_vars();
        linearize_complementarity(&mut kkt, Linearization::Sos1).unwrap();
        // one aux for x − y, none for the bound y >= 0
        assert_eq!(kkt.model.num_vars(), nv + 1);
        assert_eq!(kkt.model.sos1_groups().len(), 2);
        assert!(trace_report(&kkt.artifacts).contains("cap -> dual[cap], slack_link[cap], compl[cap]"));
    }

    #[test]
    fn lower_binaries_are_rejected() {
        let mut bp = BilevelProblem::new();
        bp.add_lower_var("b", VarKind::Binary, 0.0, 1.0).unwrap();
        assert!(matches!(derive_kkt(&bp), Err(ReformError::LowerHasBinaries(_))));
    }
}
