//! Receding-horizon mission loop: plan, apply the first control, mark what
//! the camera actually sees from the new position, repeat.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::{build, extract_plan, FormulationError, P2Instance, StepPlan};
use crate::geometry::{face_view_predicate, Cuboid, FeaturePoint, Vec3};
use crate::milp::{solve_milp, SolveStatus, SolverConfig};
use crate::sensing::{footprint, inspects, CameraModel};
use crate::vehicle::{step, AgentState, DynamicsModel, OperatingBounds};

/// Per-point inspected flags; a flag never resets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectionMemory {
    inspected: BTreeSet<(usize, usize)>,
}

impl InspectionMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_inspected(&self, key: (usize, usize)) -> bool {
        self.inspected.contains(&key)
    }

    /// Returns true when the flag was newly set.
    pub fn mark(&mut self, key: (usize, usize)) -> bool {
        self.inspected.insert(key)
    }

    pub fn count(&self) -> usize {
        self.inspected.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.inspected.iter()
    }

    pub fn all_inspected(&self, points: &[FeaturePoint]) -> bool {
        points.iter().all(|p| self.is_inspected(p.key()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("every feature point has been inspected")]
    MissionComplete,
    #[error("planning failed at step {step}: {source}")]
    Formulation { step: usize, source: FormulationError },
    #[error("solver reported {status:?} at step {step}")]
    Infeasible { step: usize, status: SolveStatus },
    #[error("applied control or realized state leaves the operating bounds at step {0}")]
    BoundsViolated(usize),
    #[error("invalid mission configuration: {0}")]
    BadConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub model: DynamicsModel,
    pub bounds: OperatingBounds,
    pub camera: CameraModel,
    pub cuboid: Cuboid,
    pub points: Vec<FeaturePoint>,
    pub start: AgentState,
    pub horizon: usize,
    pub t_max: usize,
    pub weight_w: f64,
    pub n_tan: usize,
    pub solver: SolverConfig,
    /// On an infeasible solve, brake for one step instead of aborting.
    pub hold_retry: bool,
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.t_max == 0 {
            return Err(ControllerError::BadConfig("t_max must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(ControllerError::BadConfig("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn instance(&self, mem: &InspectionMemory, state: AgentState) -> P2Instance {
        P2Instance {
            model: self.model,
            bounds: self.bounds,
            camera: self.camera,
            cuboid: self.cuboid.clone(),
            points: self.points.clone(),
            memory: mem.clone(),
            state,
            horizon: self.horizon,
            weight_w: self.weight_w,
            target: select_target(mem, &self.points, state.p),
            n_tan: self.n_tan,
        }
    }
}

/// Nearest unobserved point; ties go to the lowest `(face_id, idx)`.
pub fn select_target(mem: &InspectionMemory, points: &[FeaturePoint], p_now: Vec3) -> Option<FeaturePoint> {
    let mut best: Option<(f64, FeaturePoint)> = None;
    for pt in points.iter().filter(|pt| !mem.is_inspected(pt.key())) {
        let d = (pt.pos - p_now).norm();
        let better = match &best {
            None => true,
            Some((bd, bp)) => d < *bd || (d == *bd && pt.key() < bp.key()),
        };
        if better {
            best = Some((d, *pt));
        }
    }
    best.map(|(_, p)| p)
}

/// Faces the camera views from `p`, with their footprint side.
pub fn viewed_face(cuboid: &Cuboid, camera: &CameraModel, p: Vec3) -> Option<(usize, f64)> {
    cuboid
        .faces()
        .iter()
        .filter(|f| f.inspectable && face_view_predicate(f, p))
        .map(|f| (f.id, footprint(camera, f, p).side))
        .next()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Index of the realized state `x_t`, starting at 1.
    pub t: usize,
    pub prev: AgentState,
    pub control: Vec3,
    pub state: AgentState,
    pub target: Option<(usize, usize)>,
    pub plan: Option<StepPlan>,
    pub newly_inspected: Vec<(usize, usize)>,
    pub inspected_total: usize,
    pub viewed_face: Option<usize>,
    pub footprint_side: Option<f64>,
    pub nodes: usize,
    pub solve_time: f64,
    /// Set when the step applied a braking control after a failed solve.
    pub held: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionStatus {
    Complete,
    Timeout,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub start: AgentState,
    pub records: Vec<StepRecord>,
    pub status: MissionStatus,
    pub abort_reason: Option<String>,
    pub total_points: usize,
    pub memory: InspectionMemory,
}

impl MissionLog {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    pub fn inspected(&self) -> usize {
        self.memory.count()
    }
}

/// Slack accepted on realized states, which come out of the LP solver.
pub const BOUNDS_TOL: f64 = crate::formulation::START_TOL;

fn clamp_control(b: &OperatingBounds, u: Vec3) -> Vec3 {
    let mut out = u;
    for ax in crate::geometry::Axis::ALL {
        out[ax] = u[ax].clamp(b.u_lo[ax], b.u_hi[ax]);
    }
    out
}

/// Control that cancels as much of the current velocity as the box allows.
fn braking_control(cfg: &MissionConfig, s: &AgentState) -> Vec3 {
    let (a, b) = (cfg.model.alpha(), cfg.model.beta());
    let mut u = Vec3::ZERO;
    for ax in crate::geometry::Axis::ALL {
        u[ax] = (-a * s.v[ax] / b).clamp(cfg.bounds.u_lo[ax], cfg.bounds.u_hi[ax]);
    }
    u
}

/// Plans from `s`, applies the first control and updates `mem` from the realized state.
pub fn run_step(
    cfg: &MissionConfig,
    mem: &mut InspectionMemory,
    s: &AgentState,
    t: usize,
) -> Result<StepRecord, ControllerError> {
    let inst = cfg.instance(mem, *s);
    let Some(target) = inst.target else {
        return Err(ControllerError::MissionComplete);
    };
    let (model, layout) = build(&inst).map_err(|source| ControllerError::Formulation { step: t, source })?;
    let sol = solve_milp(&model, &cfg.solver);
    let (control, plan, held) = if sol.has_values() {
        let plan = extract_plan(&inst, &model, &layout, &sol)
            .map_err(|source| ControllerError::Formulation { step: t, source })?;
        (plan.controls[0], Some(plan), false)
    } else if cfg.hold_retry {
        (braking_control(cfg, s), None, true)
    } else {
        return Err(ControllerError::Infeasible { step: t, status: sol.status });
    };
    // solver output may sit a round-off outside the control box
    let control = clamp_control(&cfg.bounds, control);
    let next = step(&cfg.model, s, control);
    if !cfg.bounds.check_with_tol(&next, control, BOUNDS_TOL) {
        return Err(ControllerError::BoundsViolated(t));
    }
    let mut newly = Vec::new();
    for pt in &cfg.points {
        let f = cfg.cuboid.face(pt.face_id).expect("points are validated against the cuboid");
        if !mem.is_inspected(pt.key()) && inspects(&cfg.camera, f, next.p, pt) {
            mem.mark(pt.key());
            newly.push(pt.key());
        }
    }
    let view = viewed_face(&cfg.cuboid, &cfg.camera, next.p);
    Ok(StepRecord {
        t,
        prev: *s,
        control,
        state: next,
        target: Some(target.key()),
        plan,
        newly_inspected: newly,
        inspected_total: mem.count(),
        viewed_face: view.map(|v| v.0),
        footprint_side: view.map(|v| v.1),
        nodes: sol.nodes_explored,
        solve_time: sol.solve_time,
        held,
    })
}

pub fn run_mission(cfg: &MissionConfig) -> Result<MissionLog, ControllerError> {
    run_mission_with(cfg, |_| {})
}

/// Same as [`run_mission`], calling `on_step` after every completed step.
pub fn run_mission_with(cfg: &MissionConfig, mut on_step: impl FnMut(&StepRecord)) -> Result<MissionLog, ControllerError> {
    cfg.validate()?;
    let mut mem = InspectionMemory::new();
    let mut state = cfg.start;
    let mut records = Vec::new();
    let mut status = MissionStatus::Timeout;
    let mut abort_reason = None;
    let mut held_last = false;
    while records.len() < cfg.t_max {
        if mem.all_inspected(&cfg.points) {
            break;
        }
        match run_step(cfg, &mut mem, &state, records.len() + 1) {
            Ok(rec) => {
                if rec.held && held_last {
                    status = MissionStatus::Infeasible;
                    abort_reason = Some(format!("planning infeasible twice in a row at step {}", rec.t));
                    break;
                }
                held_last = rec.held;
                state = rec.state;
                on_step(&rec);
                records.push(rec);
            }
            Err(e @ (ControllerError::Infeasible { .. } | ControllerError::Formulation { .. })) => {
                status = MissionStatus::Infeasible;
                abort_reason = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if abort_reason.is_none() && mem.all_inspected(&cfg.points) {
        status = MissionStatus::Complete;
    }
    Ok(MissionLog { start: cfg.start, records, status, abort_reason, total_points: cfg.points.len(), memory: mem })
}

/// Realized states chain through the dynamics and stay in bounds.
pub fn check_log_dynamics(cfg: &MissionConfig, log: &MissionLog) -> Vec<usize> {
    let mut bad = Vec::new();
    let mut prev = log.start;
    for r in &log.records {
        let sim = step(&cfg.model, &prev, r.control);
        if sim.max_abs_diff(&r.state) > 1e-9 * (1.0 + sim.p.norm()) || !cfg.bounds.check_with_tol(&r.state, r.control, BOUNDS_TOL) {
            bad.push(r.t);
        }
        prev = r.state;
    }
    bad
}
