#![allow(dead_code)]

use cuboid_inspect::controller::{InspectionMemory, MissionConfig};
use cuboid_inspect::formulation::{P2Instance, DEFAULT_N_TAN};
use cuboid_inspect::geometry::{Cuboid, FeaturePoint, Vec3};
use cuboid_inspect::milp::{MilpModel, Sense, SolverConfig, VarId};
use cuboid_inspect::sensing::CameraModel;
use cuboid_inspect::vehicle::{AgentState, DynamicsModel, OperatingBounds};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn sense(rng: &mut ChaCha8Rng) -> Sense {
    match rng.gen_range(0..5) {
        0 => Sense::Eq,
        1 | 2 => Sense::Le,
        _ => Sense::Ge,
    }
}

/// Random bounded MILP; rows are built around a random box point so that a
/// good share of instances is feasible.
pub fn random_milp(rng: &mut ChaCha8Rng, max_bin: usize, max_cont: usize, max_rows: usize) -> MilpModel {
    let nb = rng.gen_range(1..=max_bin);
    let nc = rng.gen_range(0..=max_cont);
    let mut m = MilpModel::new();
    let mut vars: Vec<VarId> = Vec::new();
    let mut anchor = Vec::new();
    for k in 0..nb {
        vars.push(m.add_binary(format!("b{k}")));
        anchor.push(f64::from(rng.gen_range(0..2)));
    }
    for k in 0..nc {
        let lo = f64::from(rng.gen_range(-6..=2));
        let hi = lo + f64::from(rng.gen_range(1..=8));
        vars.push(m.add_continuous(format!("x{k}"), lo, hi).unwrap());
        anchor.push(rng.gen_range(lo..=hi));
    }
    let rows = rng.gen_range(1..=max_rows);
    for r in 0..rows {
        let mut coeffs = Vec::new();
        let mut act = 0.0;
        for (k, &v) in vars.iter().enumerate() {
            if rng.gen_bool(0.6) {
                let a = f64::from(rng.gen_range(-5..=5));
                coeffs.push((v, a));
                act += a * anchor[k];
            }
        }
        let s = sense(rng);
        let slack = rng.gen_range(-1.5..3.0);
        let rhs = match s {
            Sense::Le => act + slack,
            Sense::Ge => act - slack,
            Sense::Eq => act,
        };
        m.add_constraint(format!("r{r}"), &coeffs, s, rhs).unwrap();
    }
    for &v in &vars {
        m.set_objective_coeff(v, rng.gen_range(-5.0..5.0)).unwrap();
    }
    m
}

/// Random LP over at most `max_vars` bounded continuous variables.
pub fn random_lp(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> MilpModel {
    let n = rng.gen_range(1..=max_vars);
    let mut m = MilpModel::new();
    let vars: Vec<_> = (0..n)
        .map(|k| {
            let lo = rng.gen_range(-10.0..0.0);
            let hi = lo + rng.gen_range(0.5..15.0);
            m.add_continuous(format!("x{k}"), lo, hi).unwrap()
        })
        .collect();
    for r in 0..rng.gen_range(1..=max_rows) {
        let coeffs: Vec<_> = vars.iter().map(|&v| (v, rng.gen_range(-4.0..4.0))).collect();
        let s = if rng.gen_bool(0.1) { Sense::Eq } else if rng.gen_bool(0.5) { Sense::Le } else { Sense::Ge };
        let rhs = rng.gen_range(-8.0..8.0);
        m.add_constraint(format!("r{r}"), &coeffs, s, rhs).unwrap();
    }
    for &v in &vars {
        m.set_objective_coeff(v, rng.gen_range(-3.0..3.0)).unwrap();
    }
    m
}

/// Lateral faces of a 20 m cube centred in a 100 m workspace.
pub fn cube() -> Cuboid {
    let mut c = Cuboid::from_bounds(Vec3::new(40.0, 40.0, 0.0), Vec3::new(60.0, 60.0, 20.0)).unwrap();
    for f in 0..4 {
        c.set_inspectable(f, true).unwrap();
    }
    c
}

pub fn small_bounds() -> OperatingBounds {
    OperatingBounds {
        workspace_lo: Vec3::ZERO,
        workspace_hi: Vec3::splat(100.0),
        v_lo: Vec3::splat(-15.0),
        v_hi: Vec3::splat(15.0),
        u_lo: Vec3::splat(-20.0),
        u_hi: Vec3::splat(20.0),
    }
}

/// Vehicle and camera with the full-size parameters, cut-off `d_max`.
pub fn small_config(points: &[(usize, Vec3)], start: AgentState, horizon: usize, d_max: f64) -> MissionConfig {
    let mut counts = [0usize; 6];
    let points = points
        .iter()
        .map(|&(face_id, pos)| {
            let idx = counts[face_id];
            counts[face_id] += 1;
            FeaturePoint { face_id, idx, pos }
        })
        .collect();
    MissionConfig {
        model: DynamicsModel::new(1.0, 3.35, 0.2).unwrap(),
        bounds: small_bounds(),
        camera: CameraModel::new(10.0, 0.5, d_max).unwrap(),
        cuboid: cube(),
        points,
        start,
        horizon,
        t_max: 40,
        weight_w: 0.01,
        n_tan: DEFAULT_N_TAN,
        solver: SolverConfig::default(),
        hold_retry: false,
    }
}

/// Uniform point on lateral face `f` of [`cube`].
pub fn point_on(rng: &mut ChaCha8Rng, f: usize) -> Vec3 {
    let a = rng.gen_range(40.0..=60.0);
    let z = rng.gen_range(0.0..=20.0);
    match f {
        0 => Vec3::new(40.0, a, z),
        1 => Vec3::new(60.0, a, z),
        2 => Vec3::new(a, 40.0, z),
        _ => Vec3::new(a, 60.0, z),
    }
}

/// Random instance around [`cube`]: 1..=4 points, start 5..30 m off a face,
/// some points already in memory.
pub fn random_instance(rng: &mut ChaCha8Rng, horizon: usize) -> P2Instance {
    let n = rng.gen_range(1..=4);
    let pts: Vec<(usize, Vec3)> = (0..n)
        .map(|_| {
            let f = rng.gen_range(0..4);
            (f, point_on(rng, f))
        })
        .collect();
    let f = rng.gen_range(0..4);
    let off = rng.gen_range(5.0..30.0);
    let a = rng.gen_range(30.0..70.0);
    let z = rng.gen_range(2.0..40.0);
    let p = match f {
        0 => Vec3::new(40.0 - off, a, z),
        1 => Vec3::new(60.0 + off, a, z),
        2 => Vec3::new(a, 40.0 - off, z),
        _ => Vec3::new(a, 60.0 + off, z),
    };
    let v = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let cfg = small_config(&pts, AgentState::new(p, v), horizon, 30.0);
    let mut mem = InspectionMemory::new();
    for pt in &cfg.points {
        if rng.gen_bool(0.25) {
            mem.mark(pt.key());
        }
    }
    cfg.instance(&mem, cfg.start)
}
