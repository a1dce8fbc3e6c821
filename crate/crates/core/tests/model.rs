use approx::assert_relative_eq;
use gridpact::model::{
    annualize_capital, capital_recovery_factor, hydrogen_yield, validate_scenario, BudgetMode, ContractKind,
    ScenarioData,
};
use proptest::prelude::*;

fn reference(hours: usize) -> ScenarioData {
    ScenarioData::reference(vec![63.0; hours], vec![50.0; hours], vec![1800.0; hours])
}

#[test]
fn annualized_capital_examples() {
    // Reference value 123.26 k€/MW/yr.
    let c = annualize_capital(937_500.0, 0.1, 15).unwrap();
    assert!((c - 123_260.0).abs() / 123_260.0 < 1e-3, "{c}");
    assert_relative_eq!(annualize_capital(1000.0, 0.0, 10).unwrap(), 100.0, max_relative = 1e-12);
    // CRF(5 %, 10 y) = 0.12950457, computed by hand from r(1+r)^n / ((1+r)^n - 1).
    assert_relative_eq!(capital_recovery_factor(0.05, 10).unwrap(), 0.129_504_57, max_relative = 1e-7);
    assert_relative_eq!(annualize_capital(500_000.0, 0.05, 10).unwrap(), 64_752.29, max_relative = 1e-7);
}

#[test]
fn hydrogen_yield_examples() {
    assert_relative_eq!(hydrogen_yield(100.0, 18.0).unwrap(), 1800.0);
    assert_eq!(hydrogen_yield(0.0, 18.0).unwrap(), 0.0);
    assert_relative_eq!(hydrogen_yield(55.0, 17.77).unwrap(), 977.35, max_relative = 1e-12);
}

#[test]
fn contract_kinds_are_stable() {
    let ords: Vec<usize> = ContractKind::ALL.iter().map(|c| c.ordinal()).collect();
    assert_eq!(ords, [1, 2, 3]);
    let eligible: Vec<bool> = ContractKind::ALL.iter().map(|c| c.crc_eligible()).collect();
    assert_eq!(eligible, [true, true, false]);
}

#[test]
fn length_mismatch_is_reported() {
    let mut sc = reference(4);
    sc.network.residual_capacity.pop();
    let err = validate_scenario(sc).unwrap_err();
    assert!(err.has_length_mismatch(), "{err}");
}

#[test]
fn reference_day_is_accepted_with_default_big_m() {
    let sc = validate_scenario(reference(24)).unwrap();
    assert_eq!(sc.hours(), 24);
    // Defaulted to twice the peak residual capacity.
    assert_eq!(sc.big_m, Some(126.0));
    assert_relative_eq!(sc.tech.c_el(), 123_256.67, max_relative = 1e-6);
    assert_relative_eq!(sc.tech.h2_yield, 18.0, max_relative = 1e-12);
}

#[test]
fn pinned_crc_plus_budget_with_zero_price_is_a_division_hazard() {
    let mut sc = reference(4);
    sc.budgets.theta = 0.2;
    sc.budgets.cm_budget = 100.0;
    sc.prices.crc_plus = 0.0;
    sc.budgets.mode = BudgetMode::PinCrcPlus;
    let err = validate_scenario(sc).unwrap_err();
    assert!(err.has_division_hazard(), "{err}");
}

#[test]
fn slicing_rescales_annual_terms() {
    let sc = validate_scenario(reference(48)).unwrap();
    let part = sc.slice(10, 6).unwrap();
    assert_eq!(part.hours(), 6);
    assert_relative_eq!(part.annual_scale(), 6.0 / 8760.0);
    assert!(sc.slice(40, 9).is_err());
    assert!(sc.slice(0, 0).is_err());
}

proptest! {
    #[test]
    fn crf_falls_with_lifetime_and_rises_with_rate(r in 0.001f64..0.3, n in 1u32..60, dr in 0.001f64..0.1) {
        let base = capital_recovery_factor(r, n).unwrap();
        prop_assert!(capital_recovery_factor(r, n + 1).unwrap() < base);
        prop_assert!(capital_recovery_factor(r + dr, n).unwrap() > base);
        // Never below straight-line depreciation, never above r + 1.
        prop_assert!(base >= 1.0 / n as f64 - 1e-12);
        prop_assert!(base <= 1.0 + r + 1e-12);
    }

    #[test]
    fn validation_is_idempotent(
        hours in 1usize..30,
        peak in 1.0f64..100.0,
        price in 0.0f64..200.0,
        theta in 0.0f64..1.0,
        budget in 0.0f64..500.0,
        pin_plus in any::<bool>(),
    ) {
        let mut sc = ScenarioData::reference(vec![peak; hours], vec![price; hours], vec![1000.0; hours]);
        sc.budgets.theta = theta;
        sc.budgets.cm_budget = budget;
        sc.budgets.mode = if pin_plus { BudgetMode::PinCrcPlus } else { BudgetMode::PinCrc };
        let once = validate_scenario(sc).unwrap();
        let twice = validate_scenario(once.clone()).unwrap();
        prop_assert_eq!(once, twice);
    }
}
