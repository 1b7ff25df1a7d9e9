//! One PASS/FAIL line per acceptance criterion, run sequentially in one process.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cuboid_inspect::bench::{run_bench, BenchSpec};
use cuboid_inspect::controller::{run_mission, InspectionMemory, MissionConfig, MissionLog, MissionStatus};
use cuboid_inspect::formulation::{build, extract_plan};
use cuboid_inspect::geometry::{Axis, Vec3};
use cuboid_inspect::milp::{solve_lp, solve_milp, SolveStatus, SolverConfig};
use cuboid_inspect::oracle::{grid_planner, lp_vertex_oracle, milp_oracle, VertexOutcome};
use cuboid_inspect::scenario::{PointSpec, ScenarioFile, FULL_SCENARIO, REDUCED_SCENARIO};
use cuboid_inspect::validate::{pwl_error_bound, validate, LogView, ValidateOptions};
use cuboid_inspect::vehicle::AgentState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

/// A finished mission together with the configuration that flew it.
struct Flown {
    label: String,
    cfg: MissionConfig,
    log: MissionLog,
}

fn fly(label: &str, f: &ScenarioFile) -> Flown {
    let cfg = f.to_mission_config().expect("bundled scenario is valid");
    let log = run_mission(&cfg).expect("mission runs");
    Flown { label: label.to_string(), cfg, log }
}

fn check_counts(missions: &[Flown], names: &[&str]) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut bad = Vec::new();
    for m in missions {
        let report = validate(&m.cfg, &LogView::from_log(&m.log), ValidateOptions::default());
        for &n in names {
            let c = report.check(n).expect("known check");
            checked += c.checked;
            if !c.passed() {
                bad.push(format!("{} {n} at steps {:?}", m.label, c.steps()));
            }
        }
    }
    (checked, bad)
}

fn verdict(checked: usize, bad: &[String], what: &str) -> (bool, String) {
    if bad.is_empty() {
        (true, format!("0 violations over {checked} {what}"))
    } else {
        (false, bad.join("; "))
    }
}

fn main() -> ExitCode {
    let mut r = Report { failed: 0 };
    let full_size = ScenarioFile::parse(FULL_SCENARIO).unwrap();
    let reduced = ScenarioFile::parse(REDUCED_SCENARIO).unwrap();

    // 9
    let spec = BenchSpec { points: vec![8], horizons: vec![2, 3, 4], trials: 5, seed: 2024 };
    let rows = run_bench(&reduced, &spec, |_, _, _| {}).unwrap();
    let means: Vec<f64> = rows.iter().map(|row| row.mean_solve_time).collect();
    let trend = means.windows(2).all(|w| w[0] <= w[1]);
    let cells = rows.iter().map(|row| format!("T={} {:.4}s ({}/{} complete)", row.horizon, row.mean_solve_time, row.completed, row.trials));
    r.line(9, "solve time non-decreasing in horizon", trend, cells.collect::<Vec<_>>().join(", "));

    // 1
    let t0 = Instant::now();
    let full = fly("full-size", &full_size);
    let wall = t0.elapsed().as_secs_f64();
    let ok = full.log.status == MissionStatus::Complete
        && full.log.inspected() == 20
        && full.log.steps() <= 100
        && wall <= 1800.0;
    r.line(
        1,
        "full-size scenario completes",
        ok,
        format!("{:?}, {} steps, {}/20 inspected, {wall:.1} s wall-clock", full.log.status, full.log.steps(), full.log.inspected()),
    );

    // 2
    let small = fly("reduced", &reduced);
    let worst = small.log.records.iter().map(|x| x.solve_time).fold(0.0, f64::max);
    let ok = small.log.status == MissionStatus::Complete
        && small.log.inspected() == 8
        && small.log.steps() <= 60
        && worst <= 10.0;
    r.line(
        2,
        "reduced scenario completes",
        ok,
        format!("{:?}, {} steps, {}/8 inspected, slowest solve {worst:.3} s", small.log.status, small.log.steps(), small.log.inspected()),
    );

    // 3
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut agree = 0;
    for _ in 0..200 {
        let m = common::random_milp(&mut rng, 10, 6, 12);
        let ours = solve_milp(&m, &SolverConfig::default());
        let brute = milp_oracle(&m).unwrap();
        let same = ours.status == brute.status
            && (ours.status != SolveStatus::Optimal || (ours.objective - brute.objective).abs() <= 1e-6);
        agree += usize::from(same);
    }
    r.line(3, "MILP solver matches enumeration", agree == 200, format!("{agree}/200 within 1e-6"));

    // 4
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut agree = 0;
    for _ in 0..50 {
        let m = common::random_lp(&mut rng, 4, 6);
        let ours = solve_lp(&m);
        let same = match lp_vertex_oracle(&m, 1e-9).unwrap() {
            VertexOutcome::Optimal { objective, .. } => {
                ours.status == SolveStatus::Optimal && (ours.objective - objective).abs() <= 1e-8
            }
            VertexOutcome::Infeasible => ours.status == SolveStatus::Infeasible,
        };
        agree += usize::from(same);
    }
    r.line(4, "LP solver matches vertex enumeration", agree == 50, format!("{agree}/50 within 1e-8"));

    // extra missions for the property suites: the reduced layout with other scatters
    let mut missions = vec![full, small];
    for seed in 10..14 {
        let mut f = reduced.clone();
        if let PointSpec::Uniform { seed: s, .. } = &mut f.points {
            *s = seed;
        }
        missions.push(fly(&format!("reduced/seed{seed}"), &f));
    }

    // 5
    let (n, bad) = check_counts(&missions[..2], &["plan_indicators"]);
    let (ok, d) = verdict(n, &bad, "planned inspections");
    r.line(5, "planned inspections are geometrically sound", ok, d);

    // 6
    let (n, bad) = check_counts(&missions, &["safety", "bounds"]);
    let (ok, d) = verdict(n, &bad, "realized states");
    r.line(6, "safety and operating bounds", ok, format!("{d} in {} missions", missions.len()));

    // 7
    let (n, bad) = check_counts(&missions, &["cutoff"]);
    let (ok, d) = verdict(n, &bad, "inspection events");
    r.line(7, "inspections within the cut-off", ok, d);

    // 8: reward variables only for open points in every model, and decoded plans credit once
    let mut bad = Vec::new();
    let mut models = 0;
    for m in &missions {
        let mut mem = InspectionMemory::new();
        let mut state = m.log.start;
        for rec in &m.log.records {
            let inst = m.cfg.instance(&mem, state);
            let (_, layout) = build(&inst).unwrap();
            models += 1;
            for s in &layout.steps {
                for pv in &s.points {
                    let pt = &inst.points[pv.point];
                    if pv.k2.is_some() == mem.is_inspected(pt.key()) {
                        bad.push(format!("{} t={} point {:?}", m.label, rec.t, pt.key()));
                    }
                }
            }
            for &k in &rec.newly_inspected {
                mem.mark(k);
            }
            state = rec.state;
        }
    }
    let (_, dup) = check_counts(&missions, &["plan_duplication"]);
    bad.extend(dup);
    let (ok, d) = verdict(models, &bad, "models");
    r.line(8, "no duplicated inspection credit", ok, d);

    // 10
    let cfg = reduced.to_mission_config().unwrap();
    let bound = pwl_error_bound(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut within, mut worst, mut solved, mut skipped) = (0, 0.0f64, 0, 0);
    // states with no feasible plan (unavoidable exit or collision) are drawn again
    while solved < 100 {
        let p = Vec3::new(rng.gen_range(0.0..150.0), rng.gen_range(0.0..150.0), rng.gen_range(0.0..150.0));
        if cfg.cuboid.contains_interior(p) {
            continue;
        }
        let v = Vec3::new(rng.gen_range(-15.0..=15.0), rng.gen_range(-15.0..=15.0), rng.gen_range(-15.0..=15.0));
        let mut mem = InspectionMemory::new();
        for pt in &cfg.points {
            if rng.gen_bool(0.3) {
                mem.mark(pt.key());
            }
        }
        if mem.all_inspected(&cfg.points) {
            continue;
        }
        let inst = cfg.instance(&mem, AgentState::new(p, v));
        let plan = build(&inst).ok().and_then(|(m, layout)| {
            let sol = solve_milp(&m, &cfg.solver);
            extract_plan(&inst, &m, &layout, &sol).ok()
        });
        let Some(plan) = plan else {
            skipped += 1;
            continue;
        };
        solved += 1;
        let exact = (plan.ctg_pos - inst.target.unwrap().pos).norm_sq();
        let gap = cfg.weight_w * (exact - plan.ctg_epigraph).abs();
        worst = worst.max(gap);
        within += usize::from(gap <= bound);
    }
    r.line(10, "cost-to-go epigraph fidelity", within == 100, format!("{within}/100 within {bound:.4}, worst {worst:.4} ({skipped} infeasible states redrawn)"));

    // 11
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok_count = 0;
    let mut margin = f64::INFINITY;
    for k in 0..20 {
        let inst = common::random_instance(&mut rng, 1 + k % 3);
        let spacing_sq: f64 = Axis::ALL
            .iter()
            .map(|&ax| {
                let d = (inst.bounds.workspace_hi[ax] - inst.bounds.workspace_lo[ax]) / (inst.n_tan - 1) as f64;
                (0.5 * d).powi(2)
            })
            .sum();
        let pwl = inst.weight_w * spacing_sq;
        let grid = grid_planner(&inst).unwrap();
        let (m, _) = build(&inst).unwrap();
        let sol = solve_milp(&m, &SolverConfig::default());
        let pass = match (grid, sol.has_values()) {
            (Some(g), true) => {
                margin = margin.min(g.objective + pwl - sol.objective);
                sol.objective <= g.objective + pwl + 1e-9
            }
            (None, _) => true,
            (Some(_), false) => false,
        };
        ok_count += usize::from(pass);
    }
    r.line(11, "MILP plan dominates grid search", ok_count == 20, format!("{ok_count}/20, smallest margin {margin:.4}"));

    if r.failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", r.failed);
        ExitCode::FAILURE
    }
}
