//! Solver-agnostic MILP intermediate representation.
//!
//! A [`ModelIR`] holds a variable table, tagged linear constraints, SOS1
//! groups and an objective. Nothing here knows about electrolyzers or
//! network operators; the `games` module instantiates the decision symbols and
//! the `bilevel` module rewrites bilevel problems into single-level models.
//!
//! Models are solved through a [`Backend`]. The bundled backend is a
//! branch-and-bound search over LP relaxations (see [`bnb`]) that branches on
//! SOS1 groups natively, or emulates them with indicator binaries.

mod expr;
mod solution;

pub mod bnb;
pub mod diagnose;
pub mod lpfile;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::{BranchAndBound, Sos1Handling};
pub use expr::{LinExpr, VarId};
pub use solution::{evaluate, RawSolution, SolveStatus};

/// Absolute feasibility tolerance on constraints and bounds.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable name `{0}` already registered")]
    DuplicateName(String),
    #[error("constraint tag `{0}` already used")]
    DuplicateTag(String),
    #[error("unknown variable handle {0:?}")]
    UnknownVar(VarId),
    #[error("invalid bounds [{lo}, {hi}] for `{name}`")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("model has no objective")]
    MissingObjective,
    #[error("no value for variable {0:?} in solution")]
    MissingValue(VarId),
    #[error("SOS1 group `{0}` member must admit the value zero")]
    Sos1ZeroExcluded(String),
    #[error("solver backend `{0}` is not available")]
    BackendUnavailable(String),
    #[error("backend failure: {0}")]
    Backend(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relop {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relop::Le => "<=",
            Relop::Eq => "=",
            Relop::Ge => ">=",
        })
    }
}

/// `expr relop rhs`; any constant inside `expr` counts on the left-hand side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub expr: LinExpr,
    pub relop: Relop,
    pub rhs: f64,
    pub tag: String,
}

impl Constraint {
    pub fn new(expr: LinExpr, relop: Relop, rhs: f64, tag: impl Into<String>) -> Self {
        Constraint {
            expr,
            relop,
            rhs,
            tag: tag.into(),
        }
    }

    /// Amount by which the constraint is violated at `values` (zero if
    /// satisfied).
    pub fn violation(&self, values: &[f64]) -> Option<f64> {
        let lhs = self.expr.eval_dense(values)?;
        Some(match self.relop {
            Relop::Le => (lhs - self.rhs).max(0.0),
            Relop::Ge => (self.rhs - lhs).max(0.0),
            Relop::Eq => (lhs - self.rhs).abs(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintId(pub usize);

/// At most one member may take a nonzero value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sos1Group {
    pub members: Vec<VarId>,
    pub tag: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: Sense,
    pub expr: LinExpr,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelIR {
    vars: Vec<Variable>,
    names: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    tags: HashMap<String, ConstraintId>,
    sos1: Vec<Sos1Group>,
    objective: Option<Objective>,
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable. Binary variables get their bounds clipped to
    /// `[0, 1]`.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lo: f64,
        hi: f64,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(LpError::DuplicateName(name));
        }
        let (lo, hi) = match kind {
            VarKind::Binary => (lo.max(0.0), hi.min(1.0)),
            VarKind::Continuous => (lo, hi),
        };
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(LpError::InvalidBounds { name, lo, hi });
        }
        let id = VarId(self.vars.len());
        self.names.insert(name.clone(), id);
        self.vars.push(Variable { name, kind, lo, hi });
        Ok(id)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<VarId, LpError> {
        self.add_variable(name, VarKind::Continuous, lo, hi)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, LpError> {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    fn check_expr(&self, expr: &LinExpr, what: &str) -> Result<(), LpError> {
        if !expr.is_finite() {
            return Err(LpError::NonFinite(what.to_string()));
        }
        match expr.vars().find(|v| v.0 >= self.vars.len()) {
            Some(v) => Err(LpError::UnknownVar(v)),
            None => Ok(()),
        }
    }

    /// Appends `expr relop rhs`. A constraint without variables is accepted
    /// even if its constant makes it infeasible; that surfaces at solve time.
    pub fn add_constraint(
        &mut self,
        expr: LinExpr,
        relop: Relop,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<ConstraintId, LpError> {
        let tag = tag.into();
        self.check_expr(&expr, &tag)?;
        if !rhs.is_finite() {
            return Err(LpError::NonFinite(tag));
        }
        if self.tags.contains_key(&tag) {
            return Err(LpError::DuplicateTag(tag));
        }
        let id = ConstraintId(self.constraints.len());
        self.tags.insert(tag.clone(), id);
        self.constraints.push(Constraint::new(expr, relop, rhs, tag));
        Ok(id)
    }

    pub fn push_constraint(&mut self, c: Constraint) -> Result<ConstraintId, LpError> {
        self.add_constraint(c.expr, c.relop, c.rhs, c.tag)
    }

    pub fn add_sos1(&mut self, members: Vec<VarId>, tag: impl Into<String>) -> Result<(), LpError> {
        let tag = tag.into();
        for &m in &members {
            let v = self.vars.get(m.0).ok_or(LpError::UnknownVar(m))?;
            if v.lo > 0.0 || v.hi < 0.0 {
                return Err(LpError::Sos1ZeroExcluded(tag));
            }
        }
        self.sos1.push(Sos1Group { members, tag });
        Ok(())
    }

    pub fn set_objective(&mut self, sense: Sense, expr: LinExpr) -> Result<(), LpError> {
        self.check_expr(&expr, "objective")?;
        self.objective = Some(Objective { sense, expr });
        Ok(())
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn var_mut(&mut self, id: VarId) -> &mut Variable {
        &mut self.vars[id.0]
    }

    pub fn contains_var(&self, id: VarId) -> bool {
        id.0 < self.vars.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn constraint_by_tag(&self, tag: &str) -> Option<ConstraintId> {
        self.tags.get(tag).copied()
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.tags.contains_key(tag)
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn sos1_groups(&self) -> &[Sos1Group] {
        &self.sos1
    }

    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    pub fn has_integrality(&self) -> bool {
        !self.sos1.is_empty() || self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// Largest constraint or bound violation at `values`, with the offending
    /// tag (bounds are reported as `bound:<name>`).
    pub fn max_violation(&self, values: &[f64]) -> (f64, Option<String>) {
        let mut worst = (0.0, None);
        for (v, &x) in self.vars.iter().zip(values) {
            let viol = (v.lo - x).max(x - v.hi).max(0.0);
            if viol > worst.0 {
                worst = (viol, Some(format!("bound:{}", v.name)));
            }
        }
        for c in &self.constraints {
            if let Some(viol) = c.violation(values) {
                if viol > worst.0 {
                    worst = (viol, Some(c.tag.clone()));
                }
            }
        }
        worst
    }
}

/// Knobs passed to a backend for one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveParams {
    /// Relative optimality gap at which the search may stop.
    pub rel_gap: f64,
    /// Wall-clock budget in seconds.
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<u64>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            rel_gap: 1e-3,
            time_limit_s: Some(600.0),
            node_limit: None,
        }
    }
}

/// A MILP solver. Implementations must be reentrant: distinct models may be
/// solved concurrently from several threads.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn solve(&self, model: &ModelIR, params: &SolveParams) -> Result<RawSolution, LpError>;
}

/// Names accepted by [`backend_by_name`].
pub const BACKENDS: &[&str] = &["bnb", "bnb-indicator"];

/// Resolves a backend from its configuration name.
///
/// `bnb` branches on SOS1 groups directly; `bnb-indicator` replaces every
/// SOS1 group with indicator binaries and big-M rows using `big_m` for
/// members without finite bounds.
pub fn backend_by_name(name: &str, big_m: f64) -> Result<Box<dyn Backend>, LpError> {
    match name {
        "bnb" => Ok(Box::new(BranchAndBound::native())),
        "bnb-indicator" => Ok(Box::new(BranchAndBound::indicator(big_m))),
        other => Err(LpError::BackendUnavailable(other.to_string())),
    }
}

/// Solver section of a configuration file (`solver.backend`,
/// `solver.rel_gap`, `solver.time_limit_s`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub backend: String,
    pub rel_gap: f64,
    pub time_limit_s: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: "bnb".to_string(),
            rel_gap: 1e-3,
            time_limit_s: 600.0,
        }
    }
}

/// Solves `model` with `backend` to the requested relative gap.
pub fn solve(
    model: &ModelIR,
    backend: &dyn Backend,
    rel_gap: f64,
    time_limit_s: Option<f64>,
) -> Result<RawSolution, LpError> {
    let params = SolveParams {
        rel_gap,
        time_limit_s,
        node_limit: None,
    };
    backend.solve(model, &params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_variable_registers_and_rejects_duplicates() {
        let mut m = ModelIR::new();
        let p = m.add_continuous("p_grid", 0.0, f64::INFINITY).unwrap();
        assert_eq!(m.num_vars(), 1);
        assert_eq!(m.var_by_name("p_grid"), Some(p));
        assert_eq!(
            m.add_continuous("p_grid", 0.0, 1.0),
            Err(LpError::DuplicateName("p_grid".into()))
        );
    }

    #[test]
    fn binary_bounds_are_forced_into_unit_interval() {
        let mut m = ModelIR::new();
        let b = m.add_variable("b_t5", VarKind::Binary, -3.0, 7.0).unwrap();
        assert_eq!((m.var(b).lo, m.var(b).hi), (0.0, 1.0));
    }

    #[test]
    fn constraint_ids_tags_and_unknown_vars() {
        let mut m = ModelIR::new();
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        let y = m.add_continuous("y", 0.0, 10.0).unwrap();
        let id = m
            .add_constraint(LinExpr::sum([x, y]), Relop::Le, 5.0, "eq2d[t=0]")
            .unwrap();
        assert_eq!(id, ConstraintId(0));
        assert!(matches!(
            m.add_constraint(LinExpr::term(VarId(9), 1.0), Relop::Le, 1.0, "bad"),
            Err(LpError::UnknownVar(_))
        ));
        assert!(matches!(
            m.add_constraint(LinExpr::from(x), Relop::Le, 1.0, "eq2d[t=0]"),
            Err(LpError::DuplicateTag(_))
        ));
    }

    #[test]
    fn constant_infeasible_rows_are_accepted_at_build_time() {
        let mut m = ModelIR::new();
        assert!(m.add_constraint(LinExpr::new(), Relop::Le, -1.0, "never").is_ok());
    }

    #[test]
    fn unknown_backend_is_reported() {
        assert!(matches!(
            backend_by_name("gurobi", 1.0),
            Err(LpError::BackendUnavailable(_))
        ));
    }
}
