//! Independent feasibility audit of decision values.
//!
//! Residuals are recomputed from the scenario directly rather than from the
//! generated model rows, so a bug in the builders does not hide itself.

use super::{Case, DecisionValues};
use crate::model::ScenarioData;

#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    pub rule: String,
    /// Amount of violation (≥ 0; zero when satisfied).
    pub amount: f64,
}

struct Audit {
    found: Vec<Residual>,
}

impl Audit {
    /// Records `lhs <= rhs`.
    fn le(&mut self, rule: impl Into<String>, lhs: f64, rhs: f64) {
        self.found.push(Residual {
            rule: rule.into(),
            amount: (lhs - rhs).max(0.0),
        });
    }

    fn eq(&mut self, rule: impl Into<String>, lhs: f64, rhs: f64) {
        self.found.push(Residual {
            rule: rule.into(),
            amount: (lhs - rhs).abs(),
        });
    }
}

/// Residual of every domain rule at `v`. Rules cover contract accounting,
/// power and hydrogen limits, transport capacity, curtailment budgets, the
/// CM budget, double curtailment, follower mirrors and sign/integrality.
pub fn check_feasibility(v: &DecisionValues, sc: &ScenarioData, case: Case) -> Vec<Residual> {
    let k = super::Coeffs::new(sc);
    let n = k.hours;
    let mut a = Audit { found: Vec::new() };
    let el: f64 = v.p_el.iter().sum();
    let no: f64 = v.p_no.iter().sum();

    a.le("ely_contract_total", el, v.p_grid);
    for i in 0..3 {
        a.le(format!("no_contract_cap[{i}]"), v.p_no[i], v.p_el[i]);
    }
    a.eq("grid_capacity_balance", no, v.p_grid);
    for t in 0..n {
        let curtail = v.s[t] + v.s_plus[t] + v.r2[t] + v.r3[t];
        a.le(format!("ely_power_cap[t={t}]"), v.p_e[t], el - curtail);
        a.le(format!("ely_power_cap_no[t={t}]"), v.p_e[t], no - curtail);
        a.le(format!("min_load[t={t}]"), k.alpha * v.p_grid, v.p_e[t]);
        a.le(format!("h2_yield[t={t}]"), v.f[t], k.eta * v.p_e[t]);
        a.le(format!("h2_offtake[t={t}]"), v.f[t], k.demand[t]);
        a.le(format!("residual_capacity[t={t}]"), v.p_grid - curtail, k.residual[t]);
        a.le(format!("nfa85_cap[t={t}]"), v.r2[t], v.p_no[1]);
        a.le(format!("nfa85_activation[t={t}]"), v.r2[t], v.b[t] * k.demand[t] / k.eta);
        a.le(format!("nfa_cap[t={t}]"), v.r3[t], v.p_no[2]);
        a.le(format!("no_double_curtail[t={t}]"), v.s[t] + v.s_plus[t] + v.r2[t], v.p_no[0] + v.p_no[1]);
        let spend = match k.mode {
            crate::model::BudgetMode::PinCrc => k.crc[t] * v.s[t],
            crate::model::BudgetMode::PinCrcPlus => k.crc_plus * v.s_plus[t],
        };
        a.eq(format!("cm_budget[t={t}]"), spend, k.spend);
        a.le(format!("b_range[t={t}]"), v.b[t], 1.0);
        if case != Case::Game1 {
            a.eq(format!("b_integral[t={t}]"), v.b[t], v.b[t].round());
        }
    }
    a.le("nfa85_time_budget", v.b.iter().sum(), k.nfa85_events);
    a.le("nfa_energy_budget", v.r3.iter().sum(), k.nfa_hours * v.p_no[2]);

    if let (Some(se), Some(sep), Some(re2), Some(re3)) = (&v.s_el, &v.s_el_plus, &v.r_el2, &v.r_el3) {
        for t in 0..n {
            a.le(format!("ely_crc_cap[t={t}]"), se[t], v.s[t]);
            a.le(format!("ely_crc_plus_cap[t={t}]"), sep[t], v.s_plus[t]);
            a.le(format!("ely_crc_contract[t={t}]"), se[t] + sep[t], v.p_el[0] + v.p_el[1]);
            a.le(format!("ely_residual_view[t={t}]"), el - se[t] - sep[t] - re2[t] - re3[t], k.residual[t]);
            a.le(format!("ely_nfa_view[t={t}]"), re3[t], v.r3[t]);
            a.le(format!("ely_nfa85_view[t={t}]"), re2[t], v.r2[t]);
            for (name, x) in [("s_el", se[t]), ("s_el_plus", sep[t]), ("r_el2", re2[t]), ("r_el3", re3[t])] {
                a.le(format!("nonneg[{name}][t={t}]"), -x, 0.0);
            }
        }
    }
    if let Some(bs) = v.b_s {
        a.le("hpr_nfa85_switch", v.p_el[1], k.big_m * bs);
        let events = (k.nfa85_events + 1e-9).floor();
        a.le("hpr_nfa85_priority", bs * events, v.b.iter().sum());
    }

    let scalars = [v.p_grid, v.p_el[0], v.p_el[1], v.p_el[2], v.p_no[0], v.p_no[1], v.p_no[2]];
    for (i, x) in scalars.into_iter().enumerate() {
        a.le(format!("nonneg[capacity {i}]"), -x, 0.0);
    }
    for (name, series) in [
        ("p_e", &v.p_e),
        ("f", &v.f),
        ("r2", &v.r2),
        ("r3", &v.r3),
        ("s", &v.s),
        ("s_plus", &v.s_plus),
        ("b", &v.b),
    ] {
        for (t, &x) in series.iter().enumerate() {
            a.le(format!("nonneg[{name}][t={t}]"), -x, 0.0);
        }
    }
    a.found
}

/// Largest residual and the rule it belongs to.
pub fn worst(residuals: &[Residual]) -> Option<&Residual> {
    residuals.iter().max_by(|a, b| a.amount.total_cmp(&b.amount))
}
