//! Brute-force validators: binary enumeration for MILPs, vertex enumeration
//! for small LPs, and exhaustive bang-off-bang control search for short
//! horizons.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::formulation::{inspection_reward, P2Instance};
use crate::geometry::{face_view_predicate, Axis, Vec3};
use crate::milp::{solve_lp, MilpError, MilpModel, MilpSolution, Sense, SolveStatus, VarKind};
use crate::sensing::inspects;
use crate::vehicle::{step, AgentState};

pub const MAX_ORACLE_BINARIES: usize = 12;
pub const MAX_VERTEX_VARS: usize = 6;
pub const MAX_GRID_HORIZON: usize = 3;

/// Best objective over all binary assignments, each completed by an LP.
/// Ties keep the assignment with the smallest encoding (bit `k` = `k`-th binary).
pub fn milp_oracle(m: &MilpModel) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let bins: Vec<_> = (0..m.num_vars()).filter(|&k| m.vars()[k].kind == VarKind::Binary).collect();
    if bins.len() > MAX_ORACLE_BINARIES {
        return Err(MilpError::TooManyBinaries { count: bins.len(), limit: MAX_ORACLE_BINARIES });
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut solved = 0;
    for code in 0u32..(1u32 << bins.len()) {
        let mut sub = m.relaxed();
        let mut allowed = true;
        for (bit, &k) in bins.iter().enumerate() {
            let val = f64::from((code >> bit) & 1);
            let var = &m.vars()[k];
            if val < var.lo || val > var.hi {
                allowed = false;
                break;
            }
            sub.set_bounds(crate::milp::VarId(k), val, val)?;
        }
        if !allowed {
            continue;
        }
        solved += 1;
        let sol = solve_lp(&sub);
        if sol.status == SolveStatus::Unbounded {
            return Ok(MilpSolution { status: SolveStatus::Unbounded, nodes_explored: solved, ..sol });
        }
        if sol.status == SolveStatus::Optimal && best.as_ref().is_none_or(|(o, _)| sol.objective < *o) {
            best = Some((sol.objective, sol.values));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok(match best {
        Some((objective, values)) => MilpSolution {
            status: SolveStatus::Optimal,
            values,
            objective,
            best_bound: objective,
            nodes_explored: solved,
            solve_time: elapsed,
            incumbent_trace: Vec::new(),
        },
        None => MilpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective: f64::INFINITY,
            best_bound: f64::INFINITY,
            nodes_explored: solved,
            solve_time: elapsed,
            incumbent_trace: Vec::new(),
        },
    })
}

/// Outcome of [`lp_vertex_oracle`].
#[derive(Clone, Debug, PartialEq)]
pub enum VertexOutcome {
    Optimal { objective: f64, point: Vec<f64> },
    Infeasible,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum VertexError {
    #[error("vertex enumeration needs finite bounds on every variable ({0} is unbounded)")]
    UnboundedVariable(String),
    #[error("vertex enumeration is limited to {MAX_VERTEX_VARS} variables, got {0}")]
    TooManyVars(usize),
}

/// Minimum of the objective over all basic feasible solutions of the
/// relaxation, found by solving every square subsystem of active rows and bounds.
pub fn lp_vertex_oracle(m: &MilpModel, feas_tol: f64) -> Result<VertexOutcome, VertexError> {
    let n = m.num_vars();
    if n > MAX_VERTEX_VARS {
        return Err(VertexError::TooManyVars(n));
    }
    for v in m.vars() {
        if !(v.lo.is_finite() && v.hi.is_finite()) {
            return Err(VertexError::UnboundedVariable(v.name.clone()));
        }
    }
    // every candidate active hyperplane a . x = b
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in m.constraints() {
        let mut a = vec![0.0; n];
        for &(v, x) in &c.coeffs {
            a[v.0] = x;
        }
        planes.push((a, c.rhs));
    }
    for (k, v) in m.vars().iter().enumerate() {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        planes.push((e.clone(), v.lo));
        planes.push((e, v.hi));
    }
    let feasible = |x: &[f64]| -> bool {
        m.vars().iter().zip(x).all(|(v, &xi)| xi >= v.lo - feas_tol && xi <= v.hi + feas_tol)
            && m.constraints().iter().all(|c| {
                let act: f64 = c.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum();
                let tol = feas_tol * (1.0 + c.rhs.abs());
                match c.sense {
                    Sense::Le => act <= c.rhs + tol,
                    Sense::Ge => act >= c.rhs - tol,
                    Sense::Eq => (act - c.rhs).abs() <= tol,
                }
            })
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick = Vec::with_capacity(n);
    combinations(planes.len(), n, &mut pick, &mut |idx| {
        let mut a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let mut b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss_solve(&mut a, &mut b) {
            if feasible(&x) {
                let obj = m.evaluate_objective(&x);
                if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                    best = Some((obj, x));
                }
            }
        }
    });
    Ok(match best {
        Some((objective, point)) => VertexOutcome::Optimal { objective, point },
        None => VertexOutcome::Infeasible,
    })
}

fn combinations(len: usize, k: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    let from = pick.last().map_or(0, |&l| l + 1);
    for i in from..len {
        if len - i < k - pick.len() {
            break;
        }
        pick.push(i);
        combinations(len, k, pick, f);
        pick.pop();
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn gauss_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (k, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot[col];
            if f != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
                b[col + 1 + k] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid search is limited to horizon {MAX_GRID_HORIZON}, got {0}")]
    HorizonTooLong(usize),
}

/// Best bang-off-bang plan found by [`grid_planner`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPlan {
    pub controls: Vec<Vec3>,
    pub states: Vec<AgentState>,
    /// `(tau, face_id, idx)`; each point credited once, at its earliest step.
    pub inspections: Vec<(usize, usize, usize)>,
    /// Position one step past the first controlled state, where the cost-to-go is charged.
    pub ctg_pos: Vec3,
    pub objective: f64,
}

/// Exhaustive search over per-axis controls in `{u_lo, 0, u_hi}` for every
/// horizon step, scored with geometric predicates and the exact quadratic
/// cost-to-go. `Ok(None)` when every sequence leaves the bounds or enters the
/// cuboid. Ties keep the lowest base-3 encoding, step 0 most significant.
pub fn grid_planner(inst: &P2Instance) -> Result<Option<GridPlan>, GridError> {
    let t_len = inst.horizon;
    if t_len > MAX_GRID_HORIZON {
        return Err(GridError::HorizonTooLong(t_len));
    }
    let b = &inst.bounds;
    let levels = |ax: Axis| [b.u_lo[ax], 0.0, b.u_hi[ax]];
    let mut best: Option<GridPlan> = None;
    let total = 27usize.pow(t_len as u32);
    let mut controls = Vec::with_capacity(t_len);
    for code in 0..total {
        controls.clear();
        let mut rest = code;
        let mut digits = vec![0; t_len];
        for d in digits.iter_mut().rev() {
            *d = rest % 27;
            rest /= 27;
        }
        for &d in &digits {
            let (ix, iy, iz) = (d / 9, (d / 3) % 3, d % 3);
            controls.push(Vec3::new(levels(Axis::X)[ix], levels(Axis::Y)[iy], levels(Axis::Z)[iz]));
        }
        let Some(plan) = score(inst, &controls) else { continue };
        if best.as_ref().is_none_or(|bp| plan.objective < bp.objective) {
            best = Some(plan);
        }
    }
    Ok(best)
}

/// Objective of a fixed control sequence, or `None` when it is infeasible.
pub fn score(inst: &P2Instance, controls: &[Vec3]) -> Option<GridPlan> {
    let t_len = inst.horizon;
    let b = &inst.bounds;
    let mut states = Vec::with_capacity(t_len);
    let mut x = inst.state;
    for &u in controls {
        if !b.control_ok(u) {
            return None;
        }
        x = step(&inst.model, &x, u);
        if !b.position_ok(x.p) || !b.velocity_ok(x.v) || inst.cuboid.contains_interior(x.p) {
            return None;
        }
        states.push(x);
    }
    let ctg_pos = states[0].p + states[0].v * inst.model.dt();
    let ctg = match inst.target {
        Some(t) => inst.weight_w * (ctg_pos - t.pos).norm_sq(),
        None => 0.0,
    };
    let (reward, inspections) = best_credit(inst, &states, 0, &mut Vec::new());
    Some(GridPlan { controls: controls.to_vec(), states, inspections, ctg_pos, objective: ctg - reward })
}

/// Maximum reward over one viewed face (or none) per step, crediting each
/// unobserved point once.
fn best_credit(inst: &P2Instance, states: &[AgentState], tau: usize, credited: &mut Vec<(usize, usize)>) -> (f64, Vec<(usize, usize, usize)>) {
    if tau == states.len() {
        return (0.0, Vec::new());
    }
    let p = states[tau].p;
    let mut best = best_credit(inst, states, tau + 1, credited);
    for f in inst.cuboid.faces().iter().filter(|f| f.inspectable && face_view_predicate(f, p)) {
        let gained: Vec<(usize, usize)> = inst
            .points
            .iter()
            .filter(|pt| {
                pt.face_id == f.id
                    && !inst.memory.is_inspected(pt.key())
                    && !credited.contains(&pt.key())
                    && inspects(&inst.camera, f, p, pt)
            })
            .map(|pt| pt.key())
            .collect();
        if gained.is_empty() {
            continue;
        }
        let n = gained.len();
        credited.extend_from_slice(&gained);
        let (r, mut list) = best_credit(inst, states, tau + 1, credited);
        credited.truncate(credited.len() - n);
        let r = r + n as f64 * inspection_reward(inst.horizon, tau);
        if r > best.0 {
            let mut here: Vec<_> = gained.iter().map(|&(fi, i)| (tau, fi, i)).collect();
            here.append(&mut list);
            best = (r, here);
        }
    }
    best
}
