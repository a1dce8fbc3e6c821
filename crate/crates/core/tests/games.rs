use gridpact::games::{check_feasibility, extract_profits, solve_case, worst, Case, CaseOptions, SolutionBundle};
use gridpact::io::toy_scenario;
use gridpact::lp::SolveStatus;
use gridpact::model::{validate_scenario, ContractKind, ScenarioData};

fn solve(sc: &ScenarioData, case: Case) -> SolutionBundle {
    solve_case(sc, case, &CaseOptions { rel_gap: 1e-6, ..CaseOptions::default() }).unwrap()
}

fn with(f: impl FnOnce(&mut ScenarioData)) -> ScenarioData {
    let mut sc = toy_scenario();
    // Re-derived from the edited series.
    sc.big_m = None;
    f(&mut sc);
    validate_scenario(sc).unwrap()
}

#[test]
fn every_case_solves_the_toy_feasibly() {
    let sc = toy_scenario();
    for case in Case::ALL {
        let b = solve(&sc, case);
        assert!(b.is_success(), "{case}: {:?}", b.status);
        let v = b.values.as_ref().unwrap();
        let r = check_feasibility(v, &sc, case);
        let w = worst(&r).unwrap();
        assert!(w.amount <= 1e-5, "{case}: {} violated by {}", w.rule, w.amount);
    }
}

#[test]
fn zero_theta_pins_crc_curtailment_to_zero() {
    let sc = toy_scenario();
    assert_eq!(sc.budgets.theta, 0.0);
    for case in Case::ALL {
        let v = solve(&sc, case).values.unwrap();
        assert!(v.s.iter().all(|&s| s.abs() <= 1e-7), "{case}: {:?}", v.s);
    }
}

#[test]
fn uncongested_network_curtails_nothing_in_the_games() {
    let sc = with(|sc| sc.network.residual_capacity = vec![10.0; 3]);
    for case in [Case::Game1, Case::Game2] {
        let v = solve(&sc, case).values.unwrap();
        for t in 0..3 {
            let c = v.s[t] + v.s_plus[t] + v.r2[t] + v.r3[t];
            assert!(c <= 1e-7, "{case} curtails {c} in hour {t}");
        }
    }
}

#[test]
fn operator_never_buys_priceless_flexibility_at_a_huge_price() {
    let sc = with(|sc| sc.prices.crc_plus = 1e5);
    let v = solve(&sc, Case::Game2).values.unwrap();
    assert!(v.s_plus.iter().all(|&x| x <= 1e-7), "{:?}", v.s_plus);
}

#[test]
fn relaxations_dominate_their_games() {
    for crc_plus in [1.0, 5.0, 20.0, 60.0] {
        let sc = with(|sc| sc.prices.crc_plus = crc_plus);
        let g1 = solve(&sc, Case::Game1);
        let g2 = solve(&sc, Case::Game2);
        let eh = solve(&sc, Case::ElyHpr);
        let nh = solve(&sc, Case::NoHpr);
        let scale = 1.0 + g1.ely_profit.abs().max(g2.no_profit.abs());
        assert!(eh.ely_profit >= g1.ely_profit - 1e-6 * scale, "λ+={crc_plus}: {} < {}", eh.ely_profit, g1.ely_profit);
        assert!(nh.no_profit >= g2.no_profit - 1e-6 * scale, "λ+={crc_plus}: {} < {}", nh.no_profit, g2.no_profit);
    }
}

#[test]
fn ely_hpr_switch_guards_the_nfa85_contract() {
    let sc = toy_scenario();
    let v = solve(&sc, Case::ElyHpr).values.unwrap();
    let bs = v.b_s.expect("ely-hpr carries the switch");
    assert!((bs - bs.round()).abs() <= 1e-7, "switch {bs} not integral");
    if bs < 0.5 {
        assert!(v.p_el[1] <= 1e-7, "NFA85 bought with the switch off");
    }
    assert!(solve(&sc, Case::Game1).values.unwrap().b_s.is_none());
}

#[test]
fn profits_follow_from_the_decision_values() {
    let sc = toy_scenario();
    let b = solve(&sc, Case::NoHpr);
    let (ely, no) = extract_profits(&b, &sc).unwrap();
    assert!((ely - b.ely_profit).abs() <= 1e-6 * (1.0 + ely.abs()));
    assert!((no - b.no_profit).abs() <= 1e-6 * (1.0 + no.abs()));

    // Operator income by hand: tariffs on sold capacity minus CRC payments.
    let v = b.values.as_ref().unwrap();
    let mut by_hand = 0.0;
    for c in ContractKind::ALL {
        by_hand += sc.scaled_tariff(c) * v.p_no[c.index()];
    }
    for t in 0..3 {
        by_hand -= sc.prices.crc * v.s[t] + sc.prices.crc_plus * v.s_plus[t];
    }
    assert!((by_hand - no).abs() <= 1e-6 * (1.0 + no.abs()), "{by_hand} vs {no}");
}

#[test]
fn unsolved_bundles_have_no_profits() {
    let sc = with(|sc| {
        sc.tech.min_load_ratio = 0.9;
        sc.network.residual_capacity = vec![2.0, 0.1, 2.0];
        sc.budgets.cm_budget = 400.0;
        sc.budgets.theta = 0.5;
    });
    let b = solve(&sc, Case::Game2);
    assert_eq!(b.status, SolveStatus::Infeasible);
    assert!(b.diagnosis.iter().any(|(tag, _)| tag.starts_with("cm_budget")), "{:?}", b.diagnosis);
    assert!(extract_profits(&b, &sc).is_err());
}
