use gridpact::games::{solve_case, Case, CaseOptions};
use gridpact::io::toy_scenario;
use gridpact::lp::SolveStatus;
use gridpact::oracle::{enumerate_bilevel, grid_size, grid_slack, oracle_game, solve_follower, GridSpec, OracleError};

#[test]
fn idle_leader_leaves_the_follower_nothing_to_do() {
    let sc = toy_scenario();
    for case in [Case::Game1, Case::Game2] {
        let game = oracle_game(&sc, case).unwrap();
        let fixes: Vec<_> = game.bp.model.var_ids().filter(|&v| !game.bp.is_lower(v)).map(|v| (v, 0.0)).collect();
        let out = solve_follower(&sc, case, &fixes).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal, "{case}");
        assert!(out.objective.abs() <= 1e-9, "{case}: {}", out.objective);
        for (v, x) in fixes {
            assert_eq!(out.values[v.index()], x);
        }
    }
}

#[test]
fn partial_leader_assignments_are_rejected() {
    let sc = toy_scenario();
    let err = solve_follower(&sc, Case::Game1, &[]).unwrap_err();
    assert!(matches!(err, OracleError::InvalidGrid(_)), "{err}");
}

#[test]
fn hprs_have_no_oracle() {
    let grid = GridSpec::new(1.0, 1.0).unwrap();
    for case in [Case::ElyHpr, Case::NoHpr] {
        assert!(matches!(enumerate_bilevel(&toy_scenario(), case, &grid, 1), Err(OracleError::UnsupportedCase(_))));
    }
}

#[test]
fn enumeration_agrees_with_the_reformulation() {
    let sc = toy_scenario();
    let grid = GridSpec::new(0.5, 2.0).unwrap();
    for case in [Case::Game1, Case::Game2] {
        let o = enumerate_bilevel(&sc, case, &grid, 1).unwrap();
        assert_eq!(o.outcomes.len() as u128, grid_size(&sc, case, &grid).unwrap());
        let r = solve_case(&sc, case, &CaseOptions { rel_gap: 1e-6, ..CaseOptions::default() }).unwrap();
        let tol = (1e-3 * o.objective.abs().max(1.0)).max(grid_slack(&sc, case, grid.step));
        assert!((r.upper_objective - o.objective).abs() <= tol, "{case}: {} vs {}", r.upper_objective, o.objective);
        // The enumerated point is a feasible leader choice, so it can't beat
        // the exact optimum by more than the solver gap.
        assert!(o.objective >= r.upper_objective - 1e-6 * (1.0 + r.upper_objective.abs()), "{case}");
    }
}

#[test]
fn thread_count_does_not_change_the_answer() {
    let sc = toy_scenario();
    let grid = GridSpec::new(1.0, 2.0).unwrap();
    let one = enumerate_bilevel(&sc, Case::Game1, &grid, 1).unwrap();
    let three = enumerate_bilevel(&sc, Case::Game1, &grid, 3).unwrap();
    assert_eq!(one.best_point, three.best_point);
    assert_eq!(one.objective.to_bits(), three.objective.to_bits());
    // Bitwise, so unreachable points (NaN) compare equal too.
    let key = |o: &gridpact::oracle::OracleResult| -> Vec<_> {
        o.outcomes.iter().map(|p| (p.point.clone(), p.follower_objective.to_bits(), p.leader_objective.to_bits())).collect()
    };
    assert_eq!(key(&one), key(&three));
}

#[test]
fn report_has_one_line_per_point() {
    let sc = toy_scenario();
    let o = enumerate_bilevel(&sc, Case::Game2, &GridSpec::new(1.0, 1.0).unwrap(), 1).unwrap();
    let mut buf = Vec::new();
    o.write_report(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), o.outcomes.len() + 1);
    assert!(text.lines().next().unwrap().ends_with("follower_status,follower_objective,leader_objective"));
}

#[test]
fn bad_grids_are_rejected() {
    assert!(GridSpec::new(0.0, 1.0).is_err());
    assert!(GridSpec::new(0.5, -1.0).is_err());
    assert!(GridSpec::new(f64::NAN, 1.0).is_err());
}
