//! Point-mass vehicle with linear drag, discretised with a fixed step.
//!
//! Per axis: `p' = p + dt * v` and `v' = (1 - drag) * v + (dt / mass) * u`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Axis, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum VehicleError {
    #[error("invalid dynamics parameter {field}: {value}")]
    BadParameter { field: &'static str, value: f64 },
    #[error("bound box {field} is empty or non-finite along {axis}")]
    BadBounds { field: &'static str, axis: Axis },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub p: Vec3,
    pub v: Vec3,
}

impl AgentState {
    pub fn new(p: Vec3, v: Vec3) -> Self {
        Self { p, v }
    }

    pub fn at_rest(p: Vec3) -> Self {
        Self { p, v: Vec3::ZERO }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite()
    }

    pub fn max_abs_diff(&self, o: &AgentState) -> f64 {
        self.p.max_abs_diff(o.p).max(self.v.max_abs_diff(o.v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsModel {
    dt: f64,
    mass: f64,
    drag: f64,
}

impl DynamicsModel {
    pub fn new(dt: f64, mass: f64, drag: f64) -> Result<Self, VehicleError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(VehicleError::BadParameter { field: "dt", value: dt });
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(VehicleError::BadParameter { field: "mass", value: mass });
        }
        if !(0.0..1.0).contains(&drag) {
            return Err(VehicleError::BadParameter { field: "drag", value: drag });
        }
        Ok(Self { dt, mass, drag })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn drag(&self) -> f64 {
        self.drag
    }

    /// Velocity retention factor `1 - drag`.
    pub fn alpha(&self) -> f64 {
        1.0 - self.drag
    }

    /// Control gain `dt / mass`.
    pub fn beta(&self) -> f64 {
        self.dt / self.mass
    }
}

pub fn step(m: &DynamicsModel, s: &AgentState, u: Vec3) -> AgentState {
    AgentState { p: s.p + s.v * m.dt(), v: s.v * m.alpha() + u * m.beta() }
}

/// Roll the dynamics forward over a control sequence; returns the states
/// after each control, not including `s0`.
pub fn rollout(m: &DynamicsModel, s0: &AgentState, controls: &[Vec3]) -> Vec<AgentState> {
    let mut out = Vec::with_capacity(controls.len());
    let mut s = *s0;
    for &u in controls {
        s = step(m, &s, u);
        out.push(s);
    }
    out
}

/// Box constraints on position (the workspace), velocity and control.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingBounds {
    pub workspace_lo: Vec3,
    pub workspace_hi: Vec3,
    pub v_lo: Vec3,
    pub v_hi: Vec3,
    pub u_lo: Vec3,
    pub u_hi: Vec3,
}

fn within(lo: Vec3, hi: Vec3, x: Vec3) -> bool {
    Axis::ALL.iter().all(|&a| x[a] >= lo[a] && x[a] <= hi[a])
}

impl OperatingBounds {
    pub fn validate(&self) -> Result<(), VehicleError> {
        let boxes = [
            ("workspace", self.workspace_lo, self.workspace_hi),
            ("velocity", self.v_lo, self.v_hi),
            ("control", self.u_lo, self.u_hi),
        ];
        for (field, lo, hi) in boxes {
            for axis in Axis::ALL {
                if !(lo[axis].is_finite() && hi[axis].is_finite() && lo[axis] < hi[axis]) {
                    return Err(VehicleError::BadBounds { field, axis });
                }
            }
        }
        Ok(())
    }

    pub fn position_ok(&self, p: Vec3) -> bool {
        within(self.workspace_lo, self.workspace_hi, p)
    }

    pub fn velocity_ok(&self, v: Vec3) -> bool {
        within(self.v_lo, self.v_hi, v)
    }

    pub fn control_ok(&self, u: Vec3) -> bool {
        within(self.u_lo, self.u_hi, u)
    }

    /// Same check with an absolute slack, for values coming out of the LP solver.
    pub fn check_with_tol(&self, s: &AgentState, u: Vec3, tol: f64) -> bool {
        self.state_within(s, tol) && within(self.u_lo - Vec3::splat(tol), self.u_hi + Vec3::splat(tol), u)
    }

    /// Position and velocity inside their boxes grown by `tol`.
    pub fn state_within(&self, s: &AgentState, tol: f64) -> bool {
        let grow = |lo: Vec3, hi: Vec3, x: Vec3| within(lo - Vec3::splat(tol), hi + Vec3::splat(tol), x);
        grow(self.workspace_lo, self.workspace_hi, s.p) && grow(self.v_lo, self.v_hi, s.v)
    }
}

/// Closed box check on position, velocity and control.
pub fn check_bounds(b: &OperatingBounds, s: &AgentState, u: Vec3) -> bool {
    b.position_ok(s.p) && b.velocity_ok(s.v) && b.control_ok(u)
}
