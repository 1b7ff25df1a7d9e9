use cuboid_inspect::controller::{run_mission, MissionConfig};
use cuboid_inspect::geometry::face_distance;
use cuboid_inspect::scenario::{read_trajectory, write_log, ScenarioFile, REDUCED_SCENARIO};
use cuboid_inspect::validate::{pwl_error_bound, validate, LogView, ValidateOptions};

fn reduced_view() -> (MissionConfig, LogView) {
    let cfg = ScenarioFile::parse(REDUCED_SCENARIO).unwrap().to_mission_config().unwrap();
    let log = run_mission(&cfg).unwrap();
    (cfg, LogView::from_log(&log))
}

#[test]
fn fresh_log_passes_every_check() {
    let (cfg, view) = reduced_view();
    let report = validate(&cfg, &view, ValidateOptions { grid_check: true });
    for c in &report.checks {
        assert!(c.passed(), "{}: {:?}", c.name, c.violations);
        assert!(c.checked > 0, "{} checked nothing", c.name);
    }
}

#[test]
fn position_inside_cuboid_fails_safety_at_that_step() {
    let (cfg, mut view) = reduced_view();
    view.rows[4].p = (cfg.cuboid.lo() + cfg.cuboid.hi()) * 0.5;
    let report = validate(&cfg, &view, ValidateOptions::default());
    assert!(!report.passed());
    assert_eq!(report.check("safety").unwrap().steps(), vec![5]);
}

#[test]
fn mark_beyond_cut_off_fails() {
    let (cfg, mut view) = reduced_view();
    let k = view.rows.iter().position(|r| !r.inspected.is_empty()).unwrap();
    let key = view.rows[k].inspected[0];
    let f = cfg.cuboid.face(key.0).unwrap();
    let ax = f.normal_axis();
    // push the agent out along the face normal past the cut-off
    let d = face_distance(f, view.rows[k].p);
    let sign = (view.rows[k].p[ax] - f.plane_coord()).signum();
    view.rows[k].p[ax] += sign * (cfg.camera.d_max + 1.0 - d);
    let report = validate(&cfg, &view, ValidateOptions::default());
    assert_eq!(report.check("cutoff").unwrap().steps(), vec![view.rows[k].t]);
    assert!(!report.check("memory_soundness").unwrap().passed());
}

#[test]
fn duplicated_mark_fails_monotonicity() {
    let (cfg, mut view) = reduced_view();
    let k = view.rows.iter().position(|r| !r.inspected.is_empty()).unwrap();
    let key = view.rows[k].inspected[0];
    let last = view.rows.len() - 1;
    view.rows[last].inspected.push(key);
    let report = validate(&cfg, &view, ValidateOptions::default());
    assert!(report.check("memory_monotone").unwrap().steps().contains(&view.rows[last].t));
}

#[test]
fn tampered_control_fails_dynamics() {
    let (cfg, mut view) = reduced_view();
    view.rows[2].u.x = -view.rows[2].u.x + 1.0;
    let report = validate(&cfg, &view, ValidateOptions::default());
    assert!(report.check("dynamics").unwrap().steps().contains(&3));
}

#[test]
fn replanned_inspection_of_observed_point_fails_duplication() {
    let (cfg, mut view) = reduced_view();
    let k = view.rows.iter().position(|r| !r.inspected.is_empty()).unwrap();
    let key = view.rows[k].inspected[0];
    let later = view.rows[k + 1].t;
    let pr = view.plans.iter_mut().find(|p| p.t == later).unwrap();
    pr.planned.push(key);
    let report = validate(&cfg, &view, ValidateOptions::default());
    assert_eq!(report.check("plan_duplication").unwrap().steps(), vec![later]);
}

#[test]
fn persisted_log_validates_like_the_in_memory_one() {
    let f = ScenarioFile::parse(REDUCED_SCENARIO).unwrap();
    let cfg = f.to_mission_config().unwrap();
    let log = run_mission(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_log(&log, &f, &cfg, dir.path()).unwrap();
    let (sc, view) = LogView::load(dir.path()).unwrap();
    assert_eq!(sc, f);
    assert_eq!(view.rows, read_trajectory(&dir.path().join("trajectory.csv")).unwrap());
    let a = validate(&cfg, &view, ValidateOptions::default());
    let b = validate(&cfg, &LogView::from_log(&log), ValidateOptions::default());
    assert!(a.passed());
    assert_eq!(a, b);
}

#[test]
fn pwl_bound_matches_spacing() {
    let cfg = ScenarioFile::parse(REDUCED_SCENARIO).unwrap().to_mission_config().unwrap();
    // 150 m over 17 tangents on each axis
    let half = 150.0 / 16.0 / 2.0;
    assert!((pwl_error_bound(&cfg) - 0.01 * 3.0 * half * half).abs() < 1e-12);
}
