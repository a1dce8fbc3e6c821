//! Infeasibility diagnosis by elastic relaxation.
//!
//! Every row receives nonnegative slack variables and the total slack is
//! minimized over the continuous relaxation. Rows that keep positive slack at
//! the optimum form a (not necessarily minimal) explanation of why the model
//! has no feasible point.

use super::{BranchAndBound, LinExpr, LpError, ModelIR, Relop, Sense, SolveParams, VarKind};

/// One row that must be relaxed to restore feasibility.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub tag: String,
    pub amount: f64,
}

/// Returns the tags of rows that must be violated, largest violation first.
///
/// An empty list means the continuous relaxation is feasible, so any
/// infeasibility comes from integrality or SOS1 restrictions.
pub fn diagnose_infeasibility(model: &ModelIR) -> Result<Vec<Violation>, LpError> {
    let mut elastic = model.clone();
    elastic.sos1.clear();
    for v in &mut elastic.vars {
        v.kind = VarKind::Continuous;
    }
    let original_rows = std::mem::take(&mut elastic.constraints);
    elastic.tags.clear();
    let mut penalty = LinExpr::new();
    let mut slacks = Vec::with_capacity(original_rows.len());
    for (i, row) in original_rows.into_iter().enumerate() {
        let mut expr = row.expr.clone();
        let mut pair = (None, None);
        if matches!(row.relop, Relop::Le | Relop::Eq) {
            let s = elastic.add_continuous(format!("elastic_dn[{i}]"), 0.0, f64::INFINITY)?;
            expr.add_term(s, -1.0);
            penalty.add_term(s, 1.0);
            pair.0 = Some(s);
        }
        if matches!(row.relop, Relop::Ge | Relop::Eq) {
            let s = elastic.add_continuous(format!("elastic_up[{i}]"), 0.0, f64::INFINITY)?;
            expr.add_term(s, 1.0);
            penalty.add_term(s, 1.0);
            pair.1 = Some(s);
        }
        slacks.push((row.tag.clone(), pair));
        elastic.add_constraint(expr, row.relop, row.rhs, row.tag)?;
    }
    elastic.set_objective(Sense::Minimize, penalty)?;
    let params = SolveParams {
        rel_gap: 0.0,
        time_limit_s: Some(60.0),
        node_limit: None,
    };
    let sol = super::Backend::solve(&BranchAndBound::native(), &elastic, &params)?;
    if !sol.has_point() {
        return Err(LpError::Backend(format!(
            "elastic relaxation ended with status {}",
            sol.status.label()
        )));
    }
    let mut found: Vec<Violation> = slacks
        .into_iter()
        .filter_map(|(tag, (dn, up))| {
            let amount = dn.map_or(0.0, |s| sol.values[s.index()])
                + up.map_or(0.0, |s| sol.values[s.index()]);
            (amount > super::FEAS_TOL).then_some(Violation { tag, amount })
        })
        .collect();
    found.sort_by(|a, b| b.amount.total_cmp(&a.amount).then_with(|| a.tag.cmp(&b.tag)));
    Ok(found)
}
