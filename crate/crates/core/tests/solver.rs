//! Randomized checks of the branch-and-bound backends and the KKT
//! reformulation against plain LP solves.

use gridpact::bilevel::{add_strong_duality_cut, certify, derive_kkt, linearize_complementarity, BilevelProblem, Linearization};
use gridpact::lp::{BranchAndBound, Backend, LinExpr, ModelIR, Relop, Sense, SolveParams, SolveStatus, VarKind};
use proptest::prelude::*;

fn exact() -> SolveParams {
    SolveParams { rel_gap: 1e-9, time_limit_s: Some(30.0), node_limit: None }
}

/// `max Σ w_i x_i` over boxes `[0, u_i]`, one shared budget row and SOS1
/// groups of consecutive members.
fn sos_model(w: &[f64], u: &[f64], budget: f64, group: usize, fix_zero: &[usize]) -> ModelIR {
    let mut m = ModelIR::new();
    let xs: Vec<_> = (0..w.len())
        .map(|i| {
            let hi = if fix_zero.contains(&i) { 0.0 } else { u[i] };
            m.add_continuous(format!("x{i}"), 0.0, hi).unwrap()
        })
        .collect();
    m.add_constraint(LinExpr::sum(xs.iter().copied()), Relop::Le, budget, "budget").unwrap();
    let mut obj = LinExpr::new();
    for (i, &x) in xs.iter().enumerate() {
        obj.add_term(x, w[i]);
    }
    m.set_objective(Sense::Maximize, obj).unwrap();
    if fix_zero.is_empty() {
        for (g, chunk) in xs.chunks(group).enumerate() {
            if chunk.len() > 1 {
                m.add_sos1(chunk.to_vec(), format!("g{g}")).unwrap();
            }
        }
    }
    m
}

/// Every choice of one active member per group, solved as a plain LP.
fn brute_force(w: &[f64], u: &[f64], budget: f64, group: usize) -> f64 {
    let groups: Vec<Vec<usize>> = (0..w.len()).collect::<Vec<_>>().chunks(group).map(<[usize]>::to_vec).collect();
    let mut best = f64::NEG_INFINITY;
    let combos: usize = groups.iter().map(Vec::len).product();
    for mut k in 0..combos {
        let mut zero = Vec::new();
        for g in &groups {
            let keep = g[k % g.len()];
            k /= g.len();
            zero.extend(g.iter().copied().filter(|&i| i != keep));
        }
        // A placeholder index keeps the model SOS-free when nothing is fixed.
        if zero.is_empty() {
            zero.push(usize::MAX);
        }
        let m = sos_model(w, u, budget, group, &zero);
        let s = BranchAndBound::native().solve(&m, &exact()).unwrap();
        best = best.max(s.objective);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sos1_groups_hold_and_match_enumeration(
        w in prop::collection::vec(0.1f64..10.0, 2..7),
        u_seed in prop::collection::vec(0.5f64..5.0, 7),
        budget in 1.0f64..15.0,
        group in 2usize..4,
    ) {
        let u = &u_seed[..w.len()];
        let m = sos_model(&w, u, budget, group, &[]);
        let expected = brute_force(&w, u, budget, group);
        for backend in [BranchAndBound::native(), BranchAndBound::indicator(100.0)] {
            let s = backend.solve(&m, &exact()).unwrap();
            prop_assert!(s.status.is_success());
            for g in m.sos1_groups() {
                let nonzero = g.members.iter().filter(|v| s.values[v.index()].abs() > 1e-7).count();
                prop_assert!(nonzero <= 1, "group {} has {} nonzero members", g.tag, nonzero);
            }
            prop_assert!((s.objective - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
                "{} vs enumeration {}", s.objective, expected);
        }
    }

    /// A follower LP `min c·y  s.t.  A y <= b + g x,  0 <= y <= u` with the
    /// leader fixed: the reformulated single-level optimum must reproduce the
    /// follower's LP optimum and a valid certificate.
    #[test]
    fn kkt_reformulation_recovers_follower_optimum(
        c in prop::collection::vec(-5.0f64..5.0, 3),
        a in prop::collection::vec(0.0f64..3.0, 6),
        b in prop::collection::vec(0.5f64..4.0, 2),
        g in prop::collection::vec(-1.0f64..1.0, 2),
        u in prop::collection::vec(0.5f64..3.0, 3),
        x_val in 0.0f64..2.0,
        bigm in any::<bool>(),
    ) {
        let mut bp = BilevelProblem::new();
        let x = bp.add_upper_var("x", VarKind::Continuous, 0.0, 2.0).unwrap();
        bp.add_upper_constraint(LinExpr::from(x), Relop::Eq, x_val, "x_fix").unwrap();
        let ys: Vec<_> = (0..3).map(|j| bp.add_lower_var(format!("y{j}"), VarKind::Continuous, 0.0, u[j]).unwrap()).collect();
        for i in 0..2 {
            let mut row = LinExpr::term(x, -g[i]);
            for j in 0..3 {
                row.add_term(ys[j], a[3 * i + j]);
            }
            // The offset keeps b + g x positive, so y = 0 is always feasible.
            bp.add_lower_constraint(row, Relop::Le, b[i] + 2.0, format!("row{i}")).unwrap();
        }
        let mut obj = LinExpr::new();
        for j in 0..3 {
            obj.add_term(ys[j], c[j]);
        }
        bp.set_lower_objective(obj.clone()).unwrap();
        bp.set_upper_objective(Sense::Minimize, LinExpr::from(x)).unwrap();

        let follower = bp.follower_model(&[(x, x_val)], false).unwrap();
        let direct = BranchAndBound::native().solve(&follower, &exact()).unwrap();
        prop_assert_eq!(direct.status, SolveStatus::Optimal);

        let mut kkt = derive_kkt(&bp).unwrap();
        let method = if bigm { Linearization::BigM(1e3) } else { Linearization::Sos1 };
        linearize_complementarity(&mut kkt, method).unwrap();
        add_strong_duality_cut(&mut kkt).unwrap();
        let s = BranchAndBound::native().solve(&kkt.model, &exact()).unwrap();
        prop_assert!(s.status.is_success(), "{:?}", s.status);
        let lower = obj.eval_dense(&s.values).unwrap();
        prop_assert!((lower - direct.objective).abs() <= 1e-6 * (1.0 + direct.objective.abs()),
            "reformulated follower value {} vs LP {}", lower, direct.objective);
        let cert = certify(&kkt.artifacts, &s.values);
        prop_assert!(cert.max_complementarity <= 1e-6, "{:?}", cert);
        prop_assert!(cert.max_stationarity <= 1e-6, "{:?}", cert);
        prop_assert!(cert.duality_gap().abs() <= 1e-6 * (1.0 + cert.primal_objective.abs()), "{:?}", cert);
    }
}
