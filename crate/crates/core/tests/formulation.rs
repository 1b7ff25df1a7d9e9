mod common;

use common::{random_instance, small_config};
use cuboid_inspect::controller::InspectionMemory;
use cuboid_inspect::formulation::{
    build, envelope, extract_plan, inspection_reward, quadratic_tangents, reachable_boxes, FormulationError,
};
use cuboid_inspect::geometry::{face_view_predicate, Vec3};
use cuboid_inspect::milp::{solve_milp, SolveStatus, SolverConfig};
use cuboid_inspect::scenario::{ScenarioFile, FULL_SCENARIO};
use cuboid_inspect::sensing::inspects_within;
use cuboid_inspect::vehicle::{rollout, AgentState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rows_with_prefix(m: &cuboid_inspect::milp::MilpModel, prefix: &str) -> usize {
    m.constraints().iter().filter(|c| c.name.starts_with(prefix)).count()
}

#[test]
fn full_size_binary_counts() {
    let cfg = ScenarioFile::parse(FULL_SCENARIO).unwrap().to_mission_config().unwrap();
    let inst = cfg.instance(&InspectionMemory::new(), cfg.start);
    let (m, layout) = build(&inst).unwrap();
    let c = layout.binary_counts();
    assert_eq!((c.b1, c.b2, c.b3, c.b4, c.k1, c.k2, c.o, c.sign), (100, 20, 400, 100, 100, 100, 30, 20));
    assert_eq!(c.total(), 870);
    assert_eq!(m.num_binaries(), 870);
}

#[test]
fn single_step_row_counts() {
    let mut cfg = small_config(&[(0, Vec3::new(40.0, 50.0, 10.0))], AgentState::at_rest(Vec3::new(20.0, 50.0, 10.0)), 1, 30.0);
    for f in 1..4 {
        cfg.cuboid.set_inspectable(f, false).unwrap();
    }
    let inst = cfg.instance(&InspectionMemory::new(), cfg.start);
    let (m, _) = build(&inst).unwrap();
    assert_eq!(rows_with_prefix(&m, "facerow_"), 5);
    assert_eq!(rows_with_prefix(&m, "oneface_"), 1);
    assert_eq!(rows_with_prefix(&m, "fovrow_"), 4);
    for k in ["and1_", "and2_", "and3_"] {
        assert_eq!(rows_with_prefix(&m, k), 1, "{k}");
    }
    assert_eq!(rows_with_prefix(&m, "outside_0_"), 6);
}

#[test]
fn reward_coefficients_and_weight() {
    assert_eq!(inspection_reward(5, 0), 1.0);
    assert!((inspection_reward(5, 4) - 0.2).abs() < 1e-15);
    let cfg = ScenarioFile::parse(FULL_SCENARIO).unwrap().to_mission_config().unwrap();
    assert_eq!(cfg.weight_w, 0.01);
    let inst = cfg.instance(&InspectionMemory::new(), cfg.start);
    let (m, layout) = build(&inst).unwrap();
    for (tau, s) in layout.steps.iter().enumerate() {
        for pv in &s.points {
            let k2 = pv.k2.unwrap();
            assert_eq!(m.objective().get(&k2).copied(), Some(-inspection_reward(5, tau)));
        }
    }
    for q in layout.q {
        assert_eq!(m.objective().get(&q).copied(), Some(0.01));
    }
}

#[test]
fn fully_observed_objective_is_cost_to_go_only() {
    let pts = [(0, Vec3::new(40.0, 50.0, 10.0)), (3, Vec3::new(45.0, 60.0, 5.0))];
    let cfg = small_config(&pts, AgentState::at_rest(Vec3::new(20.0, 50.0, 10.0)), 3, 30.0);
    let mut mem = InspectionMemory::new();
    for p in &cfg.points {
        mem.mark(p.key());
    }
    let inst = cfg.instance(&mem, cfg.start);
    let (m, layout) = build(&inst).unwrap();
    assert_eq!(layout.binary_counts().k2, 0);
    let q: Vec<_> = layout.q.to_vec();
    assert!(m.objective().keys().all(|v| q.contains(v)));
}

#[test]
fn observed_points_have_no_reward_variable() {
    let pts = [(0, Vec3::new(40.0, 50.0, 10.0)), (0, Vec3::new(40.0, 45.0, 5.0))];
    let cfg = small_config(&pts, AgentState::at_rest(Vec3::new(20.0, 50.0, 10.0)), 2, 30.0);
    let mut mem = InspectionMemory::new();
    mem.mark((0, 0));
    let (_, layout) = build(&cfg.instance(&mem, cfg.start)).unwrap();
    for s in &layout.steps {
        assert!(s.points[0].k2.is_none());
        assert!(s.points[1].k2.is_some());
    }
}

#[test]
fn drifting_plan_matches_rollout() {
    // nothing to see within the cut-off; the plan's states are a vehicle rollout
    let pts = [(1, Vec3::new(60.0, 50.0, 10.0))];
    let start = AgentState::new(Vec3::new(5.0, 5.0, 50.0), Vec3::new(1.0, 0.0, 0.0));
    let cfg = small_config(&pts, start, 3, 10.0);
    let inst = cfg.instance(&InspectionMemory::new(), start);
    let (m, layout) = build(&inst).unwrap();
    let sol = solve_milp(&m, &SolverConfig::default());
    let plan = extract_plan(&inst, &m, &layout, &sol).unwrap();
    assert!(plan.planned_inspections.is_empty());
    let sim = rollout(&cfg.model, &start, &plan.controls);
    for (a, b) in sim.iter().zip(&plan.states) {
        assert!(a.max_abs_diff(b) < 1e-6, "{a:?} {b:?}");
    }
}

#[test]
fn facing_point_gets_planned_and_is_geometrically_visible() {
    let xi = Vec3::new(40.0, 50.0, 10.0);
    let start = AgentState::at_rest(Vec3::new(25.0, 50.0, 10.0));
    let cfg = small_config(&[(0, xi)], start, 2, 30.0);
    let inst = cfg.instance(&InspectionMemory::new(), start);
    let (m, layout) = build(&inst).unwrap();
    let sol = solve_milp(&m, &SolverConfig::default());
    assert_eq!(sol.status, SolveStatus::Optimal);
    let plan = extract_plan(&inst, &m, &layout, &sol).unwrap();
    assert_eq!(plan.planned_inspections.first().map(|e| (e.1, e.2)), Some((0, 0)));
    for &(tau, f, i) in &plan.planned_inspections {
        let pt = cfg.points.iter().find(|p| p.key() == (f, i)).unwrap();
        assert!(inspects_within(&cfg.camera, cfg.cuboid.face(f).unwrap(), plan.states[tau].p, pt, 1e-6));
    }
}

#[test]
fn face_rows_reproduce_view_predicate_on_planned_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..15 {
        let inst = random_instance(&mut rng, 2);
        let (m, layout) = build(&inst).unwrap();
        let sol = solve_milp(&m, &SolverConfig::default());
        if !sol.has_values() {
            continue;
        }
        for s in &layout.steps {
            let p = Vec3::new(sol.value(s.p[0]), sol.value(s.p[1]), sol.value(s.p[2]));
            for fv in &s.faces {
                if sol.value(fv.b2) > 0.5 {
                    let f = inst.cuboid.face(fv.face_id).unwrap();
                    let near = [-1e-6, 1e-6].iter().any(|&e| face_view_predicate(f, p + Vec3::unit(f.normal_axis()) * e));
                    assert!(face_view_predicate(f, p) || near, "b2 on face {} at {p}", fv.face_id);
                }
            }
        }
    }
}

#[test]
fn decoded_plans_credit_each_point_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..15 {
        let inst = random_instance(&mut rng, 3);
        let (m, layout) = build(&inst).unwrap();
        let sol = solve_milp(&m, &SolverConfig::default());
        let Ok(plan) = extract_plan(&inst, &m, &layout, &sol) else { continue };
        let mut keys: Vec<_> = plan.planned_inspections.iter().map(|e| (e.1, e.2)).collect();
        let n = keys.len();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), n);
        assert!(keys.iter().all(|k| !inst.memory.is_inspected(*k)));
    }
}

#[test]
fn start_outside_bounds_is_rejected() {
    let cfg = small_config(&[(0, Vec3::new(40.0, 50.0, 10.0))], AgentState::at_rest(Vec3::new(-1.0, 50.0, 10.0)), 2, 30.0);
    let inst = cfg.instance(&InspectionMemory::new(), cfg.start);
    assert!(matches!(build(&inst), Err(FormulationError::StartOutOfBounds(_))));
}

#[test]
fn reach_boxes_contain_rollouts() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    use rand::Rng;
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 3);
        let boxes = reachable_boxes(&inst).unwrap();
        let us: Vec<Vec3> = (0..3)
            .map(|_| Vec3::new(rng.gen_range(-20.0..=20.0), rng.gen_range(-20.0..=20.0), rng.gen_range(-20.0..=20.0)))
            .collect();
        let traj = rollout(&inst.model, &inst.state, &us);
        for (k, (x, b)) in traj.iter().zip(&boxes).enumerate() {
            let inside_ws = inst.bounds.position_ok(x.p) && inst.bounds.velocity_ok(x.v);
            if !inside_ws {
                break;
            }
            for ax in cuboid_inspect::geometry::Axis::ALL {
                assert!(x.p[ax] >= b.p_lo[ax] - 1e-9 && x.p[ax] <= b.p_hi[ax] + 1e-9, "step {k} {x:?} {b:?}");
                assert!(x.v[ax] >= b.v_lo[ax] - 1e-9 && x.v[ax] <= b.v_hi[ax] + 1e-9, "step {k} {x:?} {b:?}");
            }
        }
    }
}

#[test]
fn envelope_examples() {
    // tangents of q^2 at -1, 0, 1
    let (lines, dx) = quadratic_tangents(0.0, -1.0, 1.0, 3);
    assert_eq!(dx, 1.0);
    assert_eq!(lines.len(), 3);
    assert_eq!(envelope(&lines, 0.5), 0.0);
    assert_eq!(envelope(&lines, 1.0), 1.0);
}

#[test]
fn envelope_vanishes_at_off_grid_center() {
    let (lines, dx) = quadratic_tangents(185.0, 0.0, 500.0, 17);
    assert_eq!(lines.len(), 18);
    assert_eq!(envelope(&lines, 185.0), 0.0);
    for k in 0..=5000 {
        let x = k as f64 * 0.1;
        let e = envelope(&lines, x);
        assert!(e >= -1e-9);
        assert!((x - 185.0).powi(2) - e <= (0.5 * dx).powi(2) + 1e-9);
    }
}

proptest! {
    #[test]
    fn envelope_underestimates_within_half_spacing(
        center in -50.0f64..150.0, lo in -100.0f64..0.0, width in 10.0f64..400.0, n in 2usize..30, t in 0.0f64..1.0,
    ) {
        let hi = lo + width;
        let (lines, dx) = quadratic_tangents(center, lo, hi, n);
        let x = lo + t * width;
        let e = envelope(&lines, x);
        let exact = (x - center).powi(2);
        prop_assert!(e <= exact + 1e-7 * (1.0 + exact));
        prop_assert!(exact - e <= (0.5 * dx).powi(2) + 1e-7 * (1.0 + exact));
    }
}
