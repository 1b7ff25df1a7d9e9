//! Invariant replay over a finished mission, in memory or from a log directory.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::{InspectionMemory, MissionConfig, MissionLog, BOUNDS_TOL};
use crate::formulation::quadratic_tangents;
use crate::geometry::{face_distance, Axis, FACE_NAMES};
use crate::oracle::{grid_planner, MAX_GRID_HORIZON};
use crate::scenario::{read_plans, read_summary, read_trajectory, MissionSummary, PlanRecord, ScenarioError, ScenarioFile, TrajectoryRecord};
use crate::sensing::inspects_within;
use crate::vehicle::{step, AgentState};

/// Slack on geometric checks of solver-produced states.
pub const GEO_TOL: f64 = 1e-6;

/// A mission as persisted: realized rows plus every horizon plan.
#[derive(Clone, Debug, PartialEq)]
pub struct LogView {
    pub start: AgentState,
    pub rows: Vec<TrajectoryRecord>,
    pub plans: Vec<PlanRecord>,
    pub summary: Option<MissionSummary>,
}

impl LogView {
    pub fn from_log(log: &MissionLog) -> Self {
        let rows = log
            .records
            .iter()
            .map(|r| TrajectoryRecord {
                t: r.t,
                p: r.state.p,
                v: r.state.v,
                u: r.control,
                viewed_face: r.viewed_face,
                footprint_side: r.footprint_side,
                inspected: r.newly_inspected.clone(),
                inspected_total: r.inspected_total,
                solve_time: r.solve_time,
                nodes: r.nodes,
                plan_objective: r.plan.as_ref().map(|p| p.objective),
                held: r.held,
            })
            .collect();
        let mut plans = Vec::new();
        for r in &log.records {
            let Some(plan) = &r.plan else { continue };
            for (tau, (x, u)) in plan.states.iter().zip(&plan.controls).enumerate() {
                plans.push(PlanRecord {
                    t: r.t,
                    tau,
                    p: x.p,
                    v: x.v,
                    u: *u,
                    planned: plan.planned_inspections.iter().filter(|e| e.0 == tau).map(|e| (e.1, e.2)).collect(),
                });
            }
        }
        LogView { start: log.start, rows, plans, summary: Some(crate::scenario::summarize(log)) }
    }

    /// Reads a directory written by [`crate::scenario::write_log`].
    pub fn load(dir: &Path) -> Result<(ScenarioFile, LogView), ScenarioError> {
        let scenario = crate::scenario::load_scenario(&dir.join("scenario.cfg"))?;
        let summary = read_summary(&dir.join("summary.json"))?;
        let view = LogView {
            start: AgentState::new(summary.start_p, summary.start_v),
            rows: read_trajectory(&dir.join("trajectory.csv"))?,
            plans: read_plans(&dir.join("plans.csv"))?,
            summary: Some(summary),
        };
        Ok((scenario, view))
    }

    fn plan_at(&self, t: usize) -> impl Iterator<Item = &PlanRecord> {
        self.plans.iter().filter(move |p| p.t == t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult { name: name.to_string(), checked: 0, violations: Vec::new() }
    }

    fn fail(&mut self, t: usize, detail: String) {
        self.violations.push(Violation { t, detail });
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Step indices with at least one violation, ascending.
    pub fn steps(&self) -> Vec<usize> {
        self.violations.iter().map(|v| v.t).collect::<BTreeSet<_>>().into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOptions {
    /// Compare every plan against the bang-off-bang grid search (horizon <= 3 only).
    pub grid_check: bool,
}

/// Upper bound on `w * |envelope - quadratic|` summed over axes.
pub fn pwl_error_bound(cfg: &MissionConfig) -> f64 {
    Axis::ALL
        .iter()
        .map(|&ax| {
            let (_, dx) = quadratic_tangents(0.0, cfg.bounds.workspace_lo[ax], cfg.bounds.workspace_hi[ax], cfg.n_tan);
            (0.5 * dx).powi(2)
        })
        .sum::<f64>()
        * cfg.weight_w
}

pub fn validate(cfg: &MissionConfig, view: &LogView, opts: ValidateOptions) -> ValidationReport {
    let mut dynamics = CheckResult::new("dynamics");
    let mut bounds = CheckResult::new("bounds");
    let mut safety = CheckResult::new("safety");
    let mut soundness = CheckResult::new("memory_soundness");
    let mut cutoff = CheckResult::new("cutoff");
    let mut monotone = CheckResult::new("memory_monotone");
    let mut indicators = CheckResult::new("plan_indicators");
    let mut duplication = CheckResult::new("plan_duplication");
    let mut plan_dyn = CheckResult::new("plan_dynamics");
    let mut grid = CheckResult::new("grid_dominance");
    let mut summary = CheckResult::new("summary");

    let mut mem = InspectionMemory::new();
    let mut prev = view.start;
    let mut total = 0usize;
    if view.rows.len() > cfg.t_max {
        monotone.fail(view.rows.len(), format!("{} rows exceed t_max {}", view.rows.len(), cfg.t_max));
    }
    let pwl = pwl_error_bound(cfg);
    for (k, row) in view.rows.iter().enumerate() {
        let t = row.t;
        if t != k + 1 {
            monotone.fail(t, format!("row {k} carries time index {t}"));
        }
        let state = AgentState::new(row.p, row.v);

        dynamics.checked += 1;
        let sim = step(&cfg.model, &prev, row.u);
        let err = sim.max_abs_diff(&state);
        if err > 1e-9 * (1.0 + sim.p.norm()) {
            dynamics.fail(t, format!("state differs from the simulated step by {err:e}"));
        }

        bounds.checked += 1;
        if !cfg.bounds.check_with_tol(&state, row.u, BOUNDS_TOL) {
            bounds.fail(t, format!("p={} v={} u={} outside the operating boxes", row.p, row.v, row.u));
        }

        safety.checked += 1;
        let depth = cfg.cuboid.faces().iter().map(|f| f.halfspace.excess(row.p)).fold(f64::NEG_INFINITY, f64::max);
        if depth < -GEO_TOL {
            safety.fail(t, format!("p={} is {:.3e} m inside the cuboid", row.p, -depth));
        }

        // plans are made from `prev` with the memory as it stood before this step
        let plan: Vec<&PlanRecord> = view.plan_at(t).collect();
        if !plan.is_empty() {
            check_plan(cfg, &plan, &prev, row, &mem, &mut indicators, &mut duplication, &mut plan_dyn);
            if opts.grid_check && cfg.horizon <= MAX_GRID_HORIZON {
                grid.checked += 1;
                let inst = cfg.instance(&mem, prev);
                match (grid_planner(&inst), row.plan_objective) {
                    (Ok(Some(g)), Some(obj)) if obj > g.objective + pwl + 1e-6 => {
                        grid.fail(t, format!("plan objective {obj} exceeds grid objective {} + {pwl}", g.objective))
                    }
                    (Ok(_), None) => grid.fail(t, "plan has no objective".into()),
                    (Err(e), _) => grid.fail(t, e.to_string()),
                    _ => {}
                }
            }
        }

        let mut seen_here = BTreeSet::new();
        for &key in &row.inspected {
            soundness.checked += 1;
            cutoff.checked += 1;
            let Some(pt) = cfg.points.iter().find(|p| p.key() == key) else {
                monotone.fail(t, format!("unknown point {}:{}", key.0, key.1));
                continue;
            };
            let f = cfg.cuboid.face(pt.face_id).expect("points are validated against the cuboid");
            if !inspects_within(&cfg.camera, f, row.p, pt, GEO_TOL) {
                soundness.fail(t, format!("point {}:{} marked but not in view from {}", FACE_NAMES[key.0], key.1, row.p));
            }
            let d = face_distance(f, row.p);
            if d > cfg.camera.d_max + GEO_TOL {
                cutoff.fail(t, format!("point {}:{} marked at distance {d} > {}", FACE_NAMES[key.0], key.1, cfg.camera.d_max));
            }
            if !mem.mark(key) || !seen_here.insert(key) {
                monotone.fail(t, format!("point {}:{} marked twice", FACE_NAMES[key.0], key.1));
            }
        }
        monotone.checked += 1;
        total += row.inspected.len();
        if row.inspected_total != total {
            monotone.fail(t, format!("cumulative count {} but {} marks so far", row.inspected_total, total));
        }
        prev = state;
    }

    if let Some(s) = &view.summary {
        summary.checked += 1;
        if s.steps != view.rows.len() {
            summary.fail(s.steps, format!("summary reports {} steps, log has {}", s.steps, view.rows.len()));
        }
        if s.inspected != mem.count() {
            summary.fail(s.steps, format!("summary reports {} inspected, log marks {}", s.inspected, mem.count()));
        }
        if s.total_points != cfg.points.len() {
            summary.fail(s.steps, format!("summary reports {} points, scenario has {}", s.total_points, cfg.points.len()));
        }
    }

    let mut checks = vec![dynamics, bounds, safety, soundness, cutoff, monotone, indicators, duplication, plan_dyn];
    if opts.grid_check {
        checks.push(grid);
    }
    checks.push(summary);
    ValidationReport { checks }
}

#[allow(clippy::too_many_arguments)]
fn check_plan(
    cfg: &MissionConfig,
    plan: &[&PlanRecord],
    prev: &AgentState,
    row: &TrajectoryRecord,
    mem: &InspectionMemory,
    indicators: &mut CheckResult,
    duplication: &mut CheckResult,
    plan_dyn: &mut CheckResult,
) {
    let t = row.t;
    plan_dyn.checked += 1;
    let mut x = *prev;
    for (k, pr) in plan.iter().enumerate() {
        if pr.tau != k {
            plan_dyn.fail(t, format!("plan step {k} labelled tau={}", pr.tau));
        }
        let sim = step(&cfg.model, &x, pr.u);
        let planned = AgentState::new(pr.p, pr.v);
        let err = sim.max_abs_diff(&planned);
        if err > 1e-6 * (1.0 + sim.p.norm()) {
            plan_dyn.fail(t, format!("planned state tau={k} differs from the simulated step by {err:e}"));
        }
        if !cfg.bounds.check_with_tol(&planned, pr.u, BOUNDS_TOL) {
            plan_dyn.fail(t, format!("planned state tau={k} leaves the operating boxes"));
        }
        x = planned;
    }
    if !row.held && plan[0].u.max_abs_diff(row.u) > BOUNDS_TOL {
        plan_dyn.fail(t, format!("applied control {} differs from the planned {}", row.u, plan[0].u));
    }

    duplication.checked += 1;
    let mut once = BTreeSet::new();
    for pr in plan {
        for &key in &pr.planned {
            indicators.checked += 1;
            if mem.is_inspected(key) {
                duplication.fail(t, format!("point {}:{} planned although already inspected", FACE_NAMES[key.0], key.1));
            }
            if !once.insert(key) {
                duplication.fail(t, format!("point {}:{} planned more than once in the horizon", FACE_NAMES[key.0], key.1));
            }
            let Some(pt) = cfg.points.iter().find(|p| p.key() == key) else {
                indicators.fail(t, format!("unknown point {}:{}", key.0, key.1));
                continue;
            };
            let f = cfg.cuboid.face(pt.face_id).expect("points are validated against the cuboid");
            if !inspects_within(&cfg.camera, f, pr.p, pt, GEO_TOL) {
                indicators.fail(t, format!("tau={}: point {}:{} credited but not in view from {}", pr.tau, FACE_NAMES[key.0], key.1, pr.p));
            }
        }
    }
}
