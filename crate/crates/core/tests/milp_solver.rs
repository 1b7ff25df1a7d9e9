mod common;

use cuboid_inspect::milp::{solve_lp, solve_milp, MilpModel, Sense, SolveStatus, SolverConfig};
use cuboid_inspect::oracle::{lp_vertex_oracle, milp_oracle, VertexOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn lp_single_variable() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, 3.0).unwrap();
    m.set_objective_coeff(x, -1.0).unwrap();
    let s = solve_lp(&m);
    assert_eq!(s.status, SolveStatus::Optimal);
    assert_eq!(s.values[x.0], 3.0);
    assert_eq!(s.objective, -3.0);
}

#[test]
fn lp_covering_row() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
    let y = m.add_continuous("y", 0.0, f64::INFINITY).unwrap();
    m.set_objective_coeff(x, 1.0).unwrap();
    m.set_objective_coeff(y, 1.0).unwrap();
    m.add_constraint("cover", &[(x, 1.0), (y, 1.0)], Sense::Ge, 2.0).unwrap();
    let s = solve_lp(&m);
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective - 2.0).abs() < 1e-12);
}

#[test]
fn lp_unbounded_is_distinct() {
    let mut m = MilpModel::new();
    let x = m.add_continuous("x", 0.0, f64::INFINITY).unwrap();
    let y = m.add_continuous("y", f64::NEG_INFINITY, f64::INFINITY).unwrap();
    m.set_objective_coeff(x, -1.0).unwrap();
    m.add_constraint("link", &[(x, 1.0), (y, -1.0)], Sense::Le, 4.0).unwrap();
    assert_eq!(solve_lp(&m).status, SolveStatus::Unbounded);
    m.add_constraint("cap", &[(y, 1.0)], Sense::Le, 1.0).unwrap();
    m.add_constraint("floor", &[(y, 1.0)], Sense::Ge, 2.0).unwrap();
    assert_eq!(solve_lp(&m).status, SolveStatus::Infeasible);
}

#[test]
fn milp_knapsack_pair() {
    let mut m = MilpModel::new();
    let a = m.add_binary("x1");
    let b = m.add_binary("x2");
    m.set_objective_coeff(a, -1.0).unwrap();
    m.set_objective_coeff(b, -1.0).unwrap();
    m.add_constraint("cap", &[(a, 1.0), (b, 1.0)], Sense::Le, 1.5).unwrap();
    let s = solve_milp(&m, &SolverConfig::default());
    assert_eq!(s.status, SolveStatus::Optimal);
    assert_eq!(s.objective, -1.0);
}

#[test]
fn milp_contradictory_binary() {
    let mut m = MilpModel::new();
    let a = m.add_binary("x1");
    m.add_constraint("lo", &[(a, 1.0)], Sense::Ge, 1.0).unwrap();
    m.add_constraint("hi", &[(a, 1.0)], Sense::Le, 0.0).unwrap();
    assert_eq!(solve_milp(&m, &SolverConfig::default()).status, SolveStatus::Infeasible);
    assert_eq!(milp_oracle(&m).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn random_milps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut feasible = 0;
    for case in 0..300 {
        let m = common::random_milp(&mut rng, 10, 6, 12);
        let got = solve_milp(&m, &SolverConfig::default());
        let want = milp_oracle(&m).unwrap();
        assert_eq!(got.status, want.status, "case {case}");
        if want.status == SolveStatus::Optimal {
            feasible += 1;
            assert!((got.objective - want.objective).abs() <= 1e-6, "case {case}: {} vs {}", got.objective, want.objective);
            assert!(m.max_violation(&got.values) <= 1e-6);
            assert!(m.is_integral(&got.values, 1e-6));
        }
    }
    assert!(feasible > 100, "only {feasible} feasible instances");
}

#[test]
fn random_lps_match_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..300 {
        let m = common::random_lp(&mut rng, 4, 6);
        let got = solve_lp(&m);
        match lp_vertex_oracle(&m, 1e-9).unwrap() {
            VertexOutcome::Optimal { objective, .. } => {
                assert_eq!(got.status, SolveStatus::Optimal, "case {case}");
                assert!((got.objective - objective).abs() <= 1e-8, "case {case}: {} vs {objective}", got.objective);
            }
            VertexOutcome::Infeasible => assert_eq!(got.status, SolveStatus::Infeasible, "case {case}"),
        }
    }
}

#[test]
fn solve_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..30 {
        let m = common::random_milp(&mut rng, 10, 6, 12);
        let a = solve_milp(&m, &SolverConfig::default());
        let b = solve_milp(&m, &SolverConfig::default());
        assert_eq!(a.values, b.values);
        assert_eq!(a.nodes_explored, b.nodes_explored);
    }
}

#[test]
fn all_continuous_milp_equals_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let m = common::random_lp(&mut rng, 4, 6);
        let a = solve_milp(&m, &SolverConfig::default());
        let b = solve_lp(&m);
        assert_eq!(a.status, b.status);
        assert_eq!(a.values, b.values);
    }
}

#[test]
fn incumbent_trace_is_decreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let m = common::random_milp(&mut rng, 10, 6, 12);
        let s = solve_milp(&m, &SolverConfig::default());
        for w in s.incumbent_trace.windows(2) {
            assert!(w[1].1 <= w[0].1);
            assert!(w[1].0 >= w[0].0);
        }
    }
}

#[test]
fn basis_restarts_without_tableau_memory_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let lean = SolverConfig { tableau_budget: 0, ..SolverConfig::default() };
    for case in 0..100 {
        let m = common::random_milp(&mut rng, 10, 6, 12);
        let a = solve_milp(&m, &lean);
        let b = milp_oracle(&m).unwrap();
        assert_eq!(a.status, b.status, "case {case}");
        if b.status == SolveStatus::Optimal {
            assert!((a.objective - b.objective).abs() <= 1e-6, "case {case}");
        }
    }
}

#[test]
fn node_limit_reports_incumbent() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tight = SolverConfig { node_limit: 2, ..SolverConfig::default() };
    let mut seen = false;
    for _ in 0..100 {
        let m = common::random_milp(&mut rng, 10, 6, 12);
        let s = solve_milp(&m, &tight);
        if s.status == SolveStatus::NodeLimit && s.has_values() {
            seen = true;
            assert!(m.max_violation(&s.values) <= 1e-6);
            assert!(s.best_bound <= s.objective + 1e-9);
        }
    }
    assert!(seen);
}
