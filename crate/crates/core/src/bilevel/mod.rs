//! Bilevel problems and their single-level reformulations.
//!
//! A [`BilevelProblem`] keeps one shared variable registry (a [`ModelIR`]
//! holding the upper objective and upper constraints) plus a
//! [`LowerLevelLP`] whose rows and objective reference lower variables and a
//! set of upper "coupling" variables. The follower always minimizes.
//!
//! Two rewrites are provided: the KKT path ([`derive_kkt`] followed by
//! [`linearize_complementarity`] and [`add_strong_duality_cut`]) and the
//! high-point relaxation [`build_hpr`].

mod kkt;

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::lp::{Constraint, LinExpr, LpError, ModelIR, Relop, Sense, VarId, VarKind};

pub use kkt::{
    add_strong_duality_cut, certify, derive_kkt, linearize_complementarity, trace_report,
    ComplementarityPair, DualRow, KktCertificate, KktModel, Linearization, ReformulationArtifacts,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReformError {
    #[error("variable `{0}` is not a lower-level variable")]
    NotInLowerLevel(String),
    #[error("lower level must be an LP but `{0}` is binary")]
    LowerHasBinaries(String),
    #[error("lower level references upper variable `{0}` that is not declared as coupling")]
    UndeclaredCoupling(String),
    #[error("coupling variable `{0}` needs finite bounds for the strong-duality cut")]
    UnboundedCoupling(String),
    #[error("big-M linearization needs a finite positive M, got {0}")]
    InvalidBigM(f64),
    #[error("complementarity already linearized")]
    AlreadyLinearized,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Follower problem: `min objective` subject to `constraints`, over `vars`
/// with upper-level `couplings` held fixed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LowerLevelLP {
    pub vars: Vec<VarId>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
    pub couplings: Vec<VarId>,
}

impl LowerLevelLP {
    pub fn contains(&self, v: VarId) -> bool {
        self.vars.contains(&v)
    }
}

/// Optimistic bilevel program over a shared variable registry.
#[derive(Clone, Debug, Default)]
pub struct BilevelProblem {
    /// Variables of both levels, the upper objective and upper constraints.
    pub model: ModelIR,
    pub lower: LowerLevelLP,
    lower_set: HashSet<VarId>,
    lower_tags: HashSet<String>,
}

impl BilevelProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_upper_var(&mut self, name: impl Into<String>, kind: VarKind, lo: f64, hi: f64) -> Result<VarId, ReformError> {
        Ok(self.model.add_variable(name, kind, lo, hi)?)
    }

    pub fn add_lower_var(&mut self, name: impl Into<String>, kind: VarKind, lo: f64, hi: f64) -> Result<VarId, ReformError> {
        let v = self.model.add_variable(name, kind, lo, hi)?;
        self.lower.vars.push(v);
        self.lower_set.insert(v);
        Ok(v)
    }

    pub fn is_lower(&self, v: VarId) -> bool {
        self.lower_set.contains(&v)
    }

    pub fn add_upper_constraint(
        &mut self,
        expr: LinExpr,
        relop: Relop,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<(), ReformError> {
        let tag = tag.into();
        if self.lower_tags.contains(&tag) {
            return Err(LpError::DuplicateTag(tag).into());
        }
        self.model.add_constraint(expr, relop, rhs, tag)?;
        Ok(())
    }

    /// Adds a follower row; upper variables in `expr` become couplings.
    pub fn add_lower_constraint(
        &mut self,
        expr: LinExpr,
        relop: Relop,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<(), ReformError> {
        let tag = tag.into();
        if !expr.is_finite() || !rhs.is_finite() {
            return Err(LpError::NonFinite(tag).into());
        }
        if let Some(v) = expr.vars().find(|v| !self.model.contains_var(*v)) {
            return Err(LpError::UnknownVar(v).into());
        }
        if self.model.has_tag(&tag) || !self.lower_tags.insert(tag.clone()) {
            return Err(LpError::DuplicateTag(tag).into());
        }
        self.note_couplings(&expr);
        self.lower.constraints.push(Constraint::new(expr, relop, rhs, tag));
        Ok(())
    }

    pub fn set_upper_objective(&mut self, sense: Sense, expr: LinExpr) -> Result<(), ReformError> {
        self.model.set_objective(sense, expr)?;
        Ok(())
    }

    /// Sets the follower's objective (always minimized).
    pub fn set_lower_objective(&mut self, expr: LinExpr) -> Result<(), ReformError> {
        if !expr.is_finite() {
            return Err(LpError::NonFinite("lower objective".into()).into());
        }
        if let Some(v) = expr.vars().find(|v| !self.model.contains_var(*v)) {
            return Err(LpError::UnknownVar(v).into());
        }
        self.note_couplings(&expr);
        self.lower.objective = expr;
        Ok(())
    }

    fn note_couplings(&mut self, expr: &LinExpr) {
        let mut known: BTreeSet<VarId> = self.lower.couplings.iter().copied().collect();
        for v in expr.vars() {
            if !self.lower_set.contains(&v) {
                known.insert(v);
            }
        }
        self.lower.couplings = known.into_iter().collect();
    }

    /// Turns the listed lower binaries into continuous `[0, 1]` variables.
    pub fn relax_binaries(mut self, vars: &[VarId]) -> Result<Self, ReformError> {
        for &v in vars {
            if !self.lower_set.contains(&v) {
                let name = if self.model.contains_var(v) {
                    self.model.var(v).name.clone()
                } else {
                    format!("{v:?}")
                };
                return Err(ReformError::NotInLowerLevel(name));
            }
        }
        for &v in vars {
            let var = self.model.var_mut(v);
            var.kind = VarKind::Continuous;
            var.lo = var.lo.max(0.0);
            var.hi = var.hi.min(1.0);
        }
        Ok(self)
    }

    /// Lower variables that are still binary.
    pub fn lower_binaries(&self) -> Vec<VarId> {
        self.lower
            .vars
            .iter()
            .copied()
            .filter(|&v| self.model.var(v).kind == VarKind::Binary)
            .collect()
    }

    /// Value of the follower objective at a dense point.
    pub fn lower_objective_value(&self, values: &[f64]) -> Option<f64> {
        self.lower.objective.eval_dense(values)
    }

    /// The follower LP with every upper variable fixed to `values`, sharing
    /// variable ids with [`Self::model`]. Upper constraints are omitted
    /// unless `keep_upper` is set.
    pub fn follower_model(&self, fixes: &[(VarId, f64)], keep_upper: bool) -> Result<ModelIR, ReformError> {
        let mut m = if keep_upper {
            let mut m = self.model.clone();
            m.set_objective(Sense::Minimize, self.lower.objective.clone())?;
            m
        } else {
            let mut m = ModelIR::new();
            for v in self.model.vars() {
                m.add_variable(v.name.clone(), v.kind, v.lo, v.hi)?;
            }
            m.set_objective(Sense::Minimize, self.lower.objective.clone())?;
            m
        };
        for c in &self.lower.constraints {
            m.push_constraint(c.clone())?;
        }
        for &(v, val) in fixes {
            let var = m.var_mut(v);
            var.lo = val;
            var.hi = val;
        }
        Ok(m)
    }
}

/// High-point relaxation: the upper objective over upper rows, follower rows
/// and `extra` rows, with the follower objective dropped.
pub fn build_hpr(bp: &BilevelProblem, extra: Vec<Constraint>) -> Result<ModelIR, ReformError> {
    let mut m = bp.model.clone();
    for c in bp.lower.constraints.iter().cloned().chain(extra) {
        m.push_constraint(c)?;
    }
    Ok(m)
}
