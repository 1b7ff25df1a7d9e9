//! One receding-horizon planning step compiled into a MILP.
//!
//! Horizon step `tau` refers to the predicted state `x_{t+tau+1|t}`. Every
//! inspectable face gets a hypothetical footprint at every step; binaries
//! tie the footprint to the feature points it covers and reward a point
//! only while its face is the one being viewed.
//!
//! Variable boxes come from forward interval reachability of the dynamics,
//! which also yields the big-M constants and a set of implied fixings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::InspectionMemory;
use crate::geometry::{build_face_matrices, Axis, Cuboid, FeaturePoint, Vec3, EPS_GEO};
use crate::milp::{MilpError, MilpModel, MilpSolution, Sense, SolveStatus, VarId, EPS_INT, EPS_LP};
use crate::sensing::CameraModel;
use crate::vehicle::{step, AgentState, DynamicsModel, OperatingBounds};

pub const DEFAULT_N_TAN: usize = 17;

#[derive(Debug, Error, PartialEq)]
pub enum FormulationError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("tangent count must be at least 2, got {0}")]
    TooFewTangents(usize),
    #[error("start state {0:?} violates the operating bounds")]
    StartOutOfBounds(AgentState),
    #[error("no state inside the workspace is reachable at horizon step {0}")]
    Unreachable(usize),
    #[error("feature point {face}:{idx} lies on a face that is not inspectable")]
    UninspectableFace { face: usize, idx: usize },
    #[error("solution is not integral: {name} = {value}")]
    NotIntegral { name: String, value: f64 },
    #[error("solution has status {0:?}, no plan to extract")]
    NoSolution(SolveStatus),
    #[error("decoded state at step {step} deviates from the dynamics by {error}")]
    DynamicsMismatch { step: usize, error: f64 },
    #[error(transparent)]
    Milp(#[from] MilpError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Instance {
    pub model: DynamicsModel,
    pub bounds: OperatingBounds,
    pub camera: CameraModel,
    pub cuboid: Cuboid,
    pub points: Vec<FeaturePoint>,
    pub memory: InspectionMemory,
    pub state: AgentState,
    pub horizon: usize,
    pub weight_w: f64,
    /// Nearest unobserved point; `None` once every point is observed.
    pub target: Option<FeaturePoint>,
    pub n_tan: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceVars {
    pub face_id: usize,
    /// Signed offset from the face plane split into its positive and negative parts.
    pub e_pos: VarId,
    pub e_neg: VarId,
    pub sign: VarId,
    pub dist: VarId,
    pub side: VarId,
    pub b1: [VarId; 5],
    pub b2: VarId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointVars {
    /// Index into `P2Instance::points`.
    pub point: usize,
    pub b3: [VarId; 4],
    pub b4: VarId,
    pub k1: VarId,
    /// Absent for points already in memory.
    pub k2: Option<VarId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepVars {
    pub u: [VarId; 3],
    pub p: [VarId; 3],
    pub v: [VarId; 3],
    pub faces: Vec<FaceVars>,
    pub points: Vec<PointVars>,
    pub o: [VarId; 6],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarLayout {
    pub steps: Vec<StepVars>,
    /// First control-dependent position, `p_{t+2|t}`.
    pub ctg_pos: [VarId; 3],
    pub q: [VarId; 3],
    /// Distance between neighbouring tangent abscissae, per axis.
    pub tangent_spacing: [f64; 3],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub b1: usize,
    pub b2: usize,
    pub b3: usize,
    pub b4: usize,
    pub k1: usize,
    pub k2: usize,
    pub o: usize,
    pub sign: usize,
}

impl BinaryCounts {
    pub fn total(&self) -> usize {
        self.b1 + self.b2 + self.b3 + self.b4 + self.k1 + self.k2 + self.o + self.sign
    }
}

impl VarLayout {
    pub fn binary_counts(&self) -> BinaryCounts {
        let mut c = BinaryCounts::default();
        for s in &self.steps {
            c.b1 += 5 * s.faces.len();
            c.b2 += s.faces.len();
            c.sign += s.faces.len();
            c.b3 += 4 * s.points.len();
            c.b4 += s.points.len();
            c.k1 += s.points.len();
            c.k2 += s.points.iter().filter(|p| p.k2.is_some()).count();
            c.o += 6;
        }
        c
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

/// Slack on the initial state, which is the output of an earlier LP solve.
pub const START_TOL: f64 = 1e-6;

/// Per-axis interval enclosure of a predicted state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachBox {
    pub p_lo: Vec3,
    pub p_hi: Vec3,
    pub v_lo: Vec3,
    pub v_hi: Vec3,
}

/// Enclosures of `x_{t+k|t}` for `k = 1..=T`, intersected with the operating boxes.
pub fn reachable_boxes(inst: &P2Instance) -> Result<Vec<ReachBox>, FormulationError> {
    let (dt, a, b) = (inst.model.dt(), inst.model.alpha(), inst.model.beta());
    let bd = &inst.bounds;
    let mut out = Vec::with_capacity(inst.horizon);
    let (mut plo, mut phi) = (inst.state.p, inst.state.p);
    let (mut vlo, mut vhi) = (inst.state.v, inst.state.v);
    for k in 0..inst.horizon {
        let mut r = ReachBox { p_lo: Vec3::ZERO, p_hi: Vec3::ZERO, v_lo: Vec3::ZERO, v_hi: Vec3::ZERO };
        for ax in Axis::ALL {
            r.p_lo[ax] = (plo[ax] + dt * vlo[ax]).max(bd.workspace_lo[ax]);
            r.p_hi[ax] = (phi[ax] + dt * vhi[ax]).min(bd.workspace_hi[ax]);
            r.v_lo[ax] = (a * vlo[ax] + b * bd.u_lo[ax]).max(bd.v_lo[ax]);
            r.v_hi[ax] = (a * vhi[ax] + b * bd.u_hi[ax]).min(bd.v_hi[ax]);
            if r.p_lo[ax] > r.p_hi[ax] + EPS_GEO || r.v_lo[ax] > r.v_hi[ax] + EPS_GEO {
                return Err(FormulationError::Unreachable(k));
            }
            // a state pinned to a bound can round past it
            r.p_hi[ax] = r.p_hi[ax].max(r.p_lo[ax]);
            r.v_hi[ax] = r.v_hi[ax].max(r.v_lo[ax]);
        }
        (plo, phi, vlo, vhi) = (r.p_lo, r.p_hi, r.v_lo, r.v_hi);
        out.push(r);
    }
    Ok(out)
}

/// Supporting lines `(slope, intercept)` of `(x - center)^2` at `n` evenly
/// spaced abscissae over `[lo, hi]`, plus the horizontal line at `center`
/// when it is not one of them, and the spacing. The envelope is therefore
/// non-negative and vanishes at `center`.
pub fn quadratic_tangents(center: f64, lo: f64, hi: f64, n: usize) -> (Vec<(f64, f64)>, f64) {
    let spacing = (hi - lo) / (n - 1) as f64;
    let tangent = |x: f64| {
        let slope = 2.0 * (x - center);
        (slope, (x - center).powi(2) - slope * x)
    };
    let abscissae: Vec<f64> = (0..n).map(|k| lo + spacing * k as f64).collect();
    let mut lines: Vec<(f64, f64)> = abscissae.iter().map(|&x| tangent(x)).collect();
    if !abscissae.iter().any(|&x| (x - center).abs() <= 1e-9 * (1.0 + center.abs())) {
        lines.push(tangent(center));
    }
    (lines, spacing)
}

/// Upper envelope of tangent lines at `x`.
pub fn envelope(lines: &[(f64, f64)], x: f64) -> f64 {
    lines.iter().map(|(s, c)| s * x + c).fold(f64::NEG_INFINITY, f64::max)
}

/// `(inf, sup)` of a linear expression over the current variable boxes.
fn expr_range(m: &MilpModel, expr: &[(VarId, f64)]) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0, 0.0);
    for &(v, a) in expr {
        let var = m.var(v);
        if a >= 0.0 {
            lo += a * var.lo;
            hi += a * var.hi;
        } else {
            lo += a * var.hi;
            hi += a * var.lo;
        }
    }
    (lo, hi)
}

/// Indicator row with the tightest valid M; a row that holds over the whole
/// box gets a unit M and is still emitted.
fn indicator(m: &mut MilpModel, name: String, b: VarId, expr: &[(VarId, f64)], rhs: f64) -> Result<(), MilpError> {
    let big_m = m.tight_big_m(expr, rhs).unwrap_or(1.0).max(1.0);
    m.add_indicator_leq(name, b, expr, rhs, big_m)?;
    Ok(())
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

/// Reward coefficient magnitude of an inspection at horizon step `tau`.
pub fn inspection_reward(horizon: usize, tau: usize) -> f64 {
    (horizon - tau) as f64 / horizon as f64
}

pub fn build(inst: &P2Instance) -> Result<(MilpModel, VarLayout), FormulationError> {
    let t_len = inst.horizon;
    if t_len == 0 {
        return Err(FormulationError::EmptyHorizon);
    }
    if inst.n_tan < 2 {
        return Err(FormulationError::TooFewTangents(inst.n_tan));
    }
    let bd = &inst.bounds;
    if !bd.state_within(&inst.state, START_TOL) {
        return Err(FormulationError::StartOutOfBounds(inst.state));
    }
    let faces: Vec<usize> = inst.cuboid.inspectable_faces();
    for pt in &inst.points {
        if !faces.contains(&pt.face_id) {
            return Err(FormulationError::UninspectableFace { face: pt.face_id, idx: pt.idx });
        }
    }
    let reach = reachable_boxes(inst)?;
    let (dt, alpha, beta) = (inst.model.dt(), inst.model.alpha(), inst.model.beta());
    let cam = &inst.camera;
    let mut m = MilpModel::new();
    let mut steps: Vec<StepVars> = Vec::with_capacity(t_len);

    for (tau, rb) in reach.iter().enumerate() {
        let mut u = [VarId(0); 3];
        let mut p = [VarId(0); 3];
        let mut v = [VarId(0); 3];
        for ax in Axis::ALL {
            let k = ax.index();
            let n = axis_name(ax);
            u[k] = m.add_continuous(format!("u_{tau}_{n}"), bd.u_lo[ax], bd.u_hi[ax])?;
            p[k] = m.add_continuous(format!("p_{tau}_{n}"), rb.p_lo[ax], rb.p_hi[ax])?;
            v[k] = m.add_continuous(format!("v_{tau}_{n}"), rb.v_lo[ax], rb.v_hi[ax])?;
        }
        // dynamics
        for ax in Axis::ALL {
            let k = ax.index();
            let n = axis_name(ax);
            if tau == 0 {
                let (p0, v0) = (inst.state.p[ax], inst.state.v[ax]);
                m.add_constraint(format!("dyn_p_{tau}_{n}"), &[(p[k], 1.0)], Sense::Eq, p0 + dt * v0)?;
                m.add_constraint(format!("dyn_v_{tau}_{n}"), &[(v[k], 1.0), (u[k], -beta)], Sense::Eq, alpha * v0)?;
            } else {
                let prev = &steps[tau - 1];
                m.add_constraint(
                    format!("dyn_p_{tau}_{n}"),
                    &[(p[k], 1.0), (prev.p[k], -1.0), (prev.v[k], -dt)],
                    Sense::Eq,
                    0.0,
                )?;
                m.add_constraint(
                    format!("dyn_v_{tau}_{n}"),
                    &[(v[k], 1.0), (prev.v[k], -alpha), (u[k], -beta)],
                    Sense::Eq,
                    0.0,
                )?;
            }
        }
        let pexpr = |row: [f64; 3]| -> Vec<(VarId, f64)> {
            (0..3).filter(|&k| row[k] != 0.0).map(|k| (p[k], row[k])).collect()
        };

        // faces: distance, footprint side, face-view indicators
        let mut face_vars = Vec::with_capacity(faces.len());
        for &fid in &faces {
            let f = inst.cuboid.face(fid).expect("inspectable face id is valid");
            let ax = f.normal_axis();
            let c = f.plane_coord();
            let (lo, hi) = (rb.p_lo[ax], rb.p_hi[ax]);
            let above = (hi - c).max(0.0);
            let below = (c - lo).max(0.0);
            let d_min = if lo > c { lo - c } else if hi < c { c - hi } else { 0.0 };
            let d_max = above.max(below);
            let e_pos = m.add_continuous(format!("epos_{tau}_f{fid}"), 0.0, above)?;
            let e_neg = m.add_continuous(format!("eneg_{tau}_f{fid}"), 0.0, below)?;
            let sign = m.add_binary(format!("s_{tau}_f{fid}"));
            let dist = m.add_continuous(format!("d_{tau}_f{fid}"), d_min, d_max)?;
            let side = m.add_continuous(
                format!("l_{tau}_f{fid}"),
                cam.side_unchecked(d_min),
                cam.side_unchecked(d_max),
            )?;
            m.add_constraint(format!("abs_split_{tau}_f{fid}"), &[(e_pos, 1.0), (e_neg, -1.0), (p[ax.index()], -1.0)], Sense::Eq, -c)?;
            m.add_constraint(format!("abs_pos_{tau}_f{fid}"), &[(e_pos, 1.0), (sign, -above.max(1.0))], Sense::Le, 0.0)?;
            m.add_constraint(format!("abs_neg_{tau}_f{fid}"), &[(e_neg, 1.0), (sign, below.max(1.0))], Sense::Le, below.max(1.0))?;
            m.add_constraint(format!("abs_sum_{tau}_f{fid}"), &[(dist, 1.0), (e_pos, -1.0), (e_neg, -1.0)], Sense::Eq, 0.0)?;
            m.add_constraint(format!("fov_side_{tau}_f{fid}"), &[(side, 1.0), (dist, -cam.z1)], Sense::Eq, cam.z0)?;
            if lo >= c {
                m.fix(sign, 1.0)?;
            } else if hi <= c {
                m.fix(sign, 0.0)?;
            }

            let fm = build_face_matrices(f);
            let mut b1 = [VarId(0); 5];
            let mut viewable = true;
            for (ci, slot) in b1.iter_mut().enumerate() {
                let b = m.add_binary(format!("b1_{tau}_f{fid}_{ci}"));
                let expr = pexpr(fm.j[ci]);
                let (inf, sup) = expr_range(&m, &expr);
                indicator(&mut m, format!("facerow_{tau}_f{fid}_{ci}"), b, &expr, fm.k[ci])?;
                if inf > fm.k[ci] + EPS_GEO {
                    m.fix(b, 0.0)?;
                    viewable = false;
                } else if sup <= fm.k[ci] {
                    m.fix(b, 1.0)?;
                }
                *slot = b;
            }
            let b2 = m.add_binary(format!("b2_{tau}_f{fid}"));
            let mut agg: Vec<_> = b1.iter().map(|&b| (b, -1.0)).collect();
            agg.push((b2, 5.0));
            m.add_constraint(format!("faceview_{tau}_f{fid}"), &agg, Sense::Le, 0.0)?;
            if !viewable {
                m.fix(b2, 0.0)?;
            }
            face_vars.push(FaceVars { face_id: fid, e_pos, e_neg, sign, dist, side, b1, b2 });
        }
        let one_face: Vec<_> = face_vars.iter().map(|fv| (fv.b2, 1.0)).collect();
        m.add_constraint(format!("oneface_{tau}"), &one_face, Sense::Le, 1.0)?;

        // feature points
        let mut point_vars = Vec::with_capacity(inst.points.len());
        for (pi, pt) in inst.points.iter().enumerate() {
            let fv = face_vars.iter().find(|fv| fv.face_id == pt.face_id).expect("face checked above");
            let f = inst.cuboid.face(pt.face_id).expect("valid face");
            let observed = inst.memory.is_inspected(pt.key());
            let tag = format!("{tau}_f{}_{}", pt.face_id, pt.idx);
            let mut b3 = [VarId(0); 4];
            let mut coverable = !observed && m.var(fv.b2).hi > 0.5;
            for (ci, slot) in b3.iter_mut().enumerate() {
                let ax = f.axes[ci / 2];
                let xi = pt.pos[ax];
                // rows: xi - p <= l/2 and p - xi <= l/2
                let (expr, rhs) = if ci % 2 == 0 {
                    (vec![(p[ax.index()], -1.0), (fv.side, -0.5)], -xi)
                } else {
                    (vec![(p[ax.index()], 1.0), (fv.side, -0.5)], xi)
                };
                let b = m.add_binary(format!("b3_{tag}_{ci}"));
                let (inf, sup) = expr_range(&m, &expr);
                indicator(&mut m, format!("fovrow_{tag}_{ci}"), b, &expr, rhs)?;
                if observed {
                    m.fix(b, 0.0)?;
                } else if inf > rhs + EPS_GEO {
                    m.fix(b, 0.0)?;
                    coverable = false;
                } else if sup <= rhs {
                    m.fix(b, 1.0)?;
                }
                *slot = b;
            }
            let b4 = m.add_binary(format!("b4_{tag}"));
            let mut agg: Vec<_> = b3.iter().map(|&b| (b, -1.0)).collect();
            agg.push((b4, 4.0));
            m.add_constraint(format!("fovall_{tag}"), &agg, Sense::Le, 0.0)?;
            let k1 = m.add_binary(format!("k1_{tag}"));
            m.add_constraint(format!("and1_{tag}"), &[(k1, 1.0), (fv.b2, -1.0)], Sense::Le, 0.0)?;
            m.add_constraint(format!("and2_{tag}"), &[(k1, 1.0), (b4, -1.0)], Sense::Le, 0.0)?;
            m.add_constraint(format!("and3_{tag}"), &[(k1, 1.0), (fv.b2, -1.0), (b4, -1.0)], Sense::Ge, -1.0)?;
            let k2 = if observed {
                None
            } else {
                let k2 = m.add_binary(format!("k2_{tag}"));
                m.add_constraint(format!("memory_{tag}"), &[(k2, 1.0), (k1, -1.0)], Sense::Le, 0.0)?;
                let (d_inf, _) = expr_range(&m, &[(fv.dist, 1.0)]);
                indicator(&mut m, format!("cutoff_{tag}"), k2, &[(fv.dist, 1.0)], cam.d_max)?;
                if d_inf > cam.d_max + EPS_GEO {
                    coverable = false;
                }
                m.set_objective_coeff(k2, -inspection_reward(t_len, tau))?;
                Some(k2)
            };
            if !coverable {
                m.fix(b4, 0.0)?;
                m.fix(k1, 0.0)?;
                if let Some(k2) = k2 {
                    m.fix(k2, 0.0)?;
                }
            }
            point_vars.push(PointVars { point: pi, b3, b4, k1, k2 });
        }

        // stay outside the cuboid: at least one face half-space holds
        let mut o = [VarId(0); 6];
        let mut always_out: Option<usize> = None;
        let mut never_out = [false; 6];
        for (l, f) in inst.cuboid.faces().iter().enumerate() {
            o[l] = m.add_binary(format!("o_{tau}_{l}"));
            // phi . p >= gamma unless o = 1, written as -phi . p - M o <= -gamma
            let expr = pexpr((-f.halfspace.normal).to_array());
            let rhs = -f.halfspace.offset;
            let (inf, sup) = expr_range(&m, &expr);
            let big_m = (sup - rhs).max(1.0);
            let mut row = expr.clone();
            row.push((o[l], -big_m));
            m.add_constraint(format!("outside_{tau}_{l}"), &row, Sense::Le, rhs)?;
            if sup <= rhs && always_out.is_none() {
                always_out = Some(l);
            }
            if inf > rhs + EPS_GEO {
                never_out[l] = true;
            }
        }
        let any: Vec<_> = o.iter().map(|&x| (x, 1.0)).collect();
        m.add_constraint(format!("outside_any_{tau}"), &any, Sense::Le, 5.0)?;
        if let Some(l) = always_out {
            for (k, &ov) in o.iter().enumerate() {
                m.fix(ov, if k == l { 0.0 } else { 1.0 })?;
            }
        } else {
            for (k, &ov) in o.iter().enumerate() {
                if never_out[k] {
                    m.fix(ov, 1.0)?;
                }
            }
        }
        steps.push(StepVars { u, p, v, faces: face_vars, points: point_vars, o });
    }

    // once per horizon
    for (pi, pt) in inst.points.iter().enumerate() {
        let terms: Vec<_> = steps.iter().filter_map(|s| s.points[pi].k2.map(|k| (k, 1.0))).collect();
        if !terms.is_empty() {
            m.add_constraint(format!("once_f{}_{}", pt.face_id, pt.idx), &terms, Sense::Le, 1.0)?;
        }
    }

    // cost-to-go on the first control-dependent position
    let first = &steps[0];
    let mut ctg_pos = [VarId(0); 3];
    let mut q = [VarId(0); 3];
    let mut spacing = [0.0; 3];
    for ax in Axis::ALL {
        let k = ax.index();
        let n = axis_name(ax);
        let rb = &reach[0];
        let lo = rb.p_lo[ax] + dt * rb.v_lo[ax];
        let hi = rb.p_hi[ax] + dt * rb.v_hi[ax];
        ctg_pos[k] = m.add_continuous(format!("ctg_{n}"), lo, hi)?;
        m.add_constraint(format!("ctg_{n}"), &[(ctg_pos[k], 1.0), (first.p[k], -1.0), (first.v[k], -dt)], Sense::Eq, 0.0)?;
        match inst.target {
            Some(tgt) => {
                let (lines, dx) = quadratic_tangents(tgt.pos[ax], bd.workspace_lo[ax], bd.workspace_hi[ax], inst.n_tan);
                spacing[k] = dx;
                let q_hi = envelope(&lines, lo).max(envelope(&lines, hi));
                q[k] = m.add_continuous(format!("q_{n}"), 0.0, q_hi.max(0.0))?;
                m.add_pwl_convex_min(&format!("pwl_{n}"), q[k], ctg_pos[k], &lines)?;
                m.set_objective_coeff(q[k], inst.weight_w)?;
            }
            None => {
                q[k] = m.add_continuous(format!("q_{n}"), 0.0, 0.0)?;
            }
        }
    }
    Ok((m, VarLayout { steps, ctg_pos, q, tangent_spacing: spacing }))
}

/// Objective coefficients the formulation assigns, keyed by variable.
pub fn objective_terms(inst: &P2Instance) -> Result<Vec<(VarId, f64)>, FormulationError> {
    let (m, _) = build(inst)?;
    Ok(m.objective().iter().map(|(v, c)| (*v, *c)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub controls: Vec<Vec3>,
    /// Predicted states `x_{t+1|t} .. x_{t+T|t}`.
    pub states: Vec<AgentState>,
    /// `(tau, face_id, idx)` for every planned inspection.
    pub planned_inspections: Vec<(usize, usize, usize)>,
    /// Face flagged as viewed at each horizon step.
    pub viewed_faces: Vec<Option<usize>>,
    /// Epigraph value of the cost-to-go term, before weighting.
    pub ctg_epigraph: f64,
    pub ctg_pos: Vec3,
    pub objective: f64,
    pub status: SolveStatus,
    pub nodes: usize,
    pub solve_time: f64,
}

fn read_bin(m: &MilpModel, sol: &MilpSolution, v: VarId) -> Result<bool, FormulationError> {
    let x = sol.value(v);
    if (x - x.round()).abs() > EPS_INT {
        return Err(FormulationError::NotIntegral { name: m.var(v).name.clone(), value: x });
    }
    Ok(x.round() == 1.0)
}

pub fn extract_plan(
    inst: &P2Instance,
    model: &MilpModel,
    layout: &VarLayout,
    sol: &MilpSolution,
) -> Result<StepPlan, FormulationError> {
    if !sol.has_values() {
        return Err(FormulationError::NoSolution(sol.status));
    }
    let vec = |ids: &[VarId; 3]| Vec3::new(sol.value(ids[0]), sol.value(ids[1]), sol.value(ids[2]));
    let mut controls = Vec::new();
    let mut states = Vec::new();
    let mut planned = Vec::new();
    let mut viewed = Vec::new();
    let mut prev = inst.state;
    for (tau, s) in layout.steps.iter().enumerate() {
        let u = vec(&s.u);
        let x = AgentState::new(vec(&s.p), vec(&s.v));
        let sim = step(&inst.model, &prev, u);
        let err = sim.max_abs_diff(&x);
        if err > EPS_LP * (1.0 + sim.p.norm()) {
            return Err(FormulationError::DynamicsMismatch { step: tau, error: err });
        }
        let mut face = None;
        for fv in &s.faces {
            if read_bin(model, sol, fv.b2)? {
                face = Some(fv.face_id);
            }
        }
        for pv in &s.points {
            if let Some(k2) = pv.k2 {
                if read_bin(model, sol, k2)? {
                    let pt = &inst.points[pv.point];
                    planned.push((tau, pt.face_id, pt.idx));
                }
            }
        }
        controls.push(u);
        states.push(x);
        viewed.push(face);
        prev = x;
    }
    Ok(StepPlan {
        controls,
        states,
        planned_inspections: planned,
        viewed_faces: viewed,
        ctg_epigraph: layout.q.iter().map(|&v| sol.value(v)).sum(),
        ctg_pos: vec(&layout.ctg_pos),
        objective: sol.objective,
        status: sol.status,
        nodes: sol.nodes_explored,
        solve_time: sol.solve_time,
    })
}
