use serde::{Deserialize, Serialize};

use super::{LinExpr, LpError, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Search tree exhausted; the incumbent is optimal up to numerical noise.
    Optimal,
    /// Incumbent proven within the requested relative gap.
    GapOptimal,
    Infeasible,
    Unbounded,
    /// Time or node limit reached; values hold the incumbent if one exists.
    Limit,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapOptimal)
    }

    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::GapOptimal => "gap-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSolution {
    pub status: SolveStatus,
    /// One value per model variable, empty when no point is available.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Best proven bound on the objective (same sense as the objective).
    pub bound: f64,
    pub rel_gap: f64,
    pub wall_time_s: f64,
    pub nodes: u64,
}

impl RawSolution {
    pub(crate) fn without_point(status: SolveStatus, wall_time_s: f64, nodes: u64) -> Self {
        RawSolution {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            bound: f64::NAN,
            rel_gap: f64::INFINITY,
            wall_time_s,
            nodes,
        }
    }

    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> Result<f64, LpError> {
        self.values
            .get(var.index())
            .copied()
            .ok_or(LpError::MissingValue(var))
    }
}

/// Exact linear evaluation of `expr` at `sol`.
pub fn evaluate(expr: &LinExpr, sol: &RawSolution) -> Result<f64, LpError> {
    let mut acc = expr.constant_part();
    for (v, c) in expr.terms() {
        acc += c * sol.value(v)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sol(values: Vec<f64>) -> RawSolution {
        RawSolution {
            status: SolveStatus::Optimal,
            values,
            objective: 0.0,
            bound: 0.0,
            rel_gap: 0.0,
            wall_time_s: 0.0,
            nodes: 0,
        }
    }

    #[test]
    fn evaluate_linear_and_constant() {
        let x = VarId(0);
        let e = LinExpr::term(x, 2.0) + LinExpr::constant(1.0);
        assert_eq!(evaluate(&e, &sol(vec![3.0])).unwrap(), 7.0);
        assert_eq!(evaluate(&LinExpr::constant(5.0), &sol(vec![])).unwrap(), 5.0);
    }

    #[test]
    fn evaluate_missing_value_errors() {
        let e = LinExpr::sum([VarId(0), VarId(1)]);
        assert_eq!(
            evaluate(&e, &sol(vec![1.0])),
            Err(LpError::MissingValue(VarId(1)))
        );
    }
}
