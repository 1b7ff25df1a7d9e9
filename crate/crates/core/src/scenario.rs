//! Scenario files and mission logs.
//!
//! A scenario is TOML restricted to dotted `section.key = value` pairs.
//! Nested tables are accepted and read as the equivalent dotted keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{MissionConfig, MissionLog, MissionStatus};
use crate::geometry::{face_id_from_name, Cuboid, FeaturePoint, Vec3, FACE_NAMES};
use crate::milp::SolverConfig;
use crate::sensing::CameraModel;
use crate::vehicle::{AgentState, DynamicsModel, OperatingBounds};

pub const FULL_SCENARIO: &str = include_str!("../scenarios/paper_s6.cfg");
pub const REDUCED_SCENARIO: &str = include_str!("../scenarios/reduced.cfg");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Syntax(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("{path}: {detail}")]
    BadLog { path: PathBuf, detail: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PointSpec {
    /// `per_face` points drawn uniformly on each listed face.
    Uniform { per_face: usize, seed: u64, faces: Vec<usize> },
    /// Explicit coordinates per face id.
    Explicit(BTreeMap<usize, Vec<Vec3>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub workspace_lo: Vec3,
    pub workspace_hi: Vec3,
    pub cuboid_center: Vec3,
    pub cuboid_dims: Vec3,
    pub inspectable: Vec<usize>,
    pub points: PointSpec,
    pub dt: f64,
    pub mass: f64,
    pub drag: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub z0: f64,
    pub z1: f64,
    pub d_max: f64,
    pub horizon: usize,
    pub t_max: usize,
    pub weight_w: f64,
    pub n_tan: usize,
    pub hold_retry: bool,
    pub start_p: Vec3,
    pub start_v: Vec3,
    pub gap: f64,
    pub node_limit: usize,
}

const KEYS: &[&str] = &[
    "workspace.lo",
    "workspace.hi",
    "cuboid.center",
    "cuboid.dims",
    "cuboid.inspectable",
    "points.sampling",
    "points.per_face",
    "points.seed",
    "points.faces",
    "vehicle.dt",
    "vehicle.mass",
    "vehicle.drag",
    "vehicle.u_max",
    "vehicle.v_max",
    "camera.z0",
    "camera.z1",
    "camera.d_max",
    "mission.horizon",
    "mission.t_max",
    "mission.w",
    "mission.n_tan",
    "mission.hold_retry",
    "start.p",
    "start.v",
    "solver.gap",
    "solver.node_limit",
];

fn flatten(prefix: &str, t: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(inner) => flatten(&key, inner, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

struct Reader {
    kv: BTreeMap<String, toml::Value>,
    errors: Vec<String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<toml::Value> {
        let v = self.kv.remove(key);
        if v.is_none() {
            self.errors.push(format!("{key}: missing"));
        }
        v
    }

    fn num(v: &toml::Value) -> Option<f64> {
        match v {
            toml::Value::Float(f) => Some(*f),
            toml::Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn float(&mut self, key: &str, ok: impl Fn(f64) -> bool, rule: &str) -> f64 {
        let Some(v) = self.take(key) else { return f64::NAN };
        match Self::num(&v) {
            Some(x) if x.is_finite() && ok(x) => x,
            Some(x) => {
                self.errors.push(format!("{key}: {x} out of range ({rule})"));
                f64::NAN
            }
            None => {
                self.errors.push(format!("{key}: expected a number"));
                f64::NAN
            }
        }
    }

    fn float_or(&mut self, key: &str, default: f64, ok: impl Fn(f64) -> bool, rule: &str) -> f64 {
        if self.kv.contains_key(key) {
            self.float(key, ok, rule)
        } else {
            default
        }
    }

    fn count(&mut self, key: &str, min: i64) -> usize {
        let Some(v) = self.take(key) else { return 0 };
        match v {
            toml::Value::Integer(i) if i >= min => i as usize,
            toml::Value::Integer(i) => {
                self.errors.push(format!("{key}: {i} out of range (>= {min})"));
                0
            }
            _ => {
                self.errors.push(format!("{key}: expected an integer"));
                0
            }
        }
    }

    fn count_or(&mut self, key: &str, default: usize, min: i64) -> usize {
        if self.kv.contains_key(key) {
            self.count(key, min)
        } else {
            default
        }
    }

    fn vec3_value(&mut self, key: &str, v: &toml::Value) -> Option<Vec3> {
        let arr = v.as_array().filter(|a| a.len() == 3);
        let nums: Option<Vec<f64>> = arr.map(|a| a.iter().filter_map(Self::num).collect());
        match nums {
            Some(n) if n.len() == 3 && n.iter().all(|x| x.is_finite()) => Some(Vec3::new(n[0], n[1], n[2])),
            _ => {
                self.errors.push(format!("{key}: expected [x, y, z]"));
                None
            }
        }
    }

    fn vec3(&mut self, key: &str) -> Vec3 {
        let Some(v) = self.take(key) else { return Vec3::splat(f64::NAN) };
        self.vec3_value(key, &v).unwrap_or(Vec3::splat(f64::NAN))
    }

    fn vec3_or(&mut self, key: &str, default: Vec3) -> Vec3 {
        if self.kv.contains_key(key) {
            self.vec3(key)
        } else {
            default
        }
    }

    fn faces(&mut self, key: &str) -> Vec<usize> {
        let Some(v) = self.take(key) else { return Vec::new() };
        let Some(arr) = v.as_array() else {
            self.errors.push(format!("{key}: expected a list of face names"));
            return Vec::new();
        };
        let mut out = Vec::new();
        for item in arr {
            match item.as_str().and_then(face_id_from_name) {
                Some(id) if !out.contains(&id) => out.push(id),
                Some(_) => self.errors.push(format!("{key}: duplicate face {item}")),
                None => self.errors.push(format!("{key}: unknown face {item} (expected one of {FACE_NAMES:?})")),
            }
        }
        out.sort_unstable();
        out
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ScenarioError::Syntax(e.to_string()))?;
        let mut kv = BTreeMap::new();
        flatten("", &table, &mut kv);
        let mut r = Reader { kv, errors: Vec::new() };
        let pos = |x: f64| x > 0.0;
        let nonneg = |x: f64| x >= 0.0;
        let workspace_lo = r.vec3("workspace.lo");
        let workspace_hi = r.vec3("workspace.hi");
        let cuboid_center = r.vec3("cuboid.center");
        let cuboid_dims = r.vec3("cuboid.dims");
        let inspectable = r.faces("cuboid.inspectable");
        let sampling = r.take("points.sampling");
        let points = match sampling.as_ref().and_then(|v| v.as_str()) {
            Some("uniform") => {
                let per_face = r.count("points.per_face", 0);
                let seed = r.count_or("points.seed", 0, 0) as u64;
                let faces = if r.kv.contains_key("points.faces") { r.faces("points.faces") } else { inspectable.clone() };
                PointSpec::Uniform { per_face, seed, faces }
            }
            Some("explicit") => {
                let mut map = BTreeMap::new();
                for (id, name) in FACE_NAMES.iter().enumerate() {
                    let key = format!("points.{name}");
                    if let Some(v) = r.kv.remove(&key) {
                        let mut list = Vec::new();
                        match v.as_array() {
                            Some(arr) => {
                                for item in arr {
                                    if let Some(p) = r.vec3_value(&key, item) {
                                        list.push(p);
                                    }
                                }
                            }
                            None => r.errors.push(format!("{key}: expected a list of [x, y, z]")),
                        }
                        map.insert(id, list);
                    }
                }
                PointSpec::Explicit(map)
            }
            Some(other) => {
                r.errors.push(format!("points.sampling: unknown mode {other:?} (expected \"uniform\" or \"explicit\")"));
                PointSpec::Explicit(BTreeMap::new())
            }
            None => {
                if sampling.is_some() {
                    r.errors.push("points.sampling: expected a string".into());
                }
                PointSpec::Explicit(BTreeMap::new())
            }
        };
        let s = ScenarioFile {
            workspace_lo,
            workspace_hi,
            cuboid_center,
            cuboid_dims,
            inspectable,
            points,
            dt: r.float("vehicle.dt", pos, "> 0"),
            mass: r.float("vehicle.mass", pos, "> 0"),
            drag: r.float("vehicle.drag", |x| (0.0..1.0).contains(&x), "in [0, 1)"),
            u_max: r.float("vehicle.u_max", pos, "> 0"),
            v_max: r.float("vehicle.v_max", pos, "> 0"),
            z0: r.float("camera.z0", nonneg, ">= 0"),
            z1: r.float("camera.z1", nonneg, ">= 0"),
            d_max: r.float("camera.d_max", pos, "> 0"),
            horizon: r.count("mission.horizon", 1),
            t_max: r.count("mission.t_max", 1),
            weight_w: r.float("mission.w", nonneg, ">= 0"),
            n_tan: r.count_or("mission.n_tan", crate::formulation::DEFAULT_N_TAN, 2),
            hold_retry: match r.kv.remove("mission.hold_retry") {
                None => false,
                Some(toml::Value::Boolean(b)) => b,
                Some(_) => {
                    r.errors.push("mission.hold_retry: expected true or false".into());
                    false
                }
            },
            start_p: r.vec3("start.p"),
            start_v: r.vec3_or("start.v", Vec3::ZERO),
            gap: r.float_or("solver.gap", 1e-6, nonneg, ">= 0"),
            node_limit: r.count_or("solver.node_limit", SolverConfig::default().node_limit, 1),
        };
        for key in r.kv.keys() {
            if !KEYS.contains(&key.as_str()) {
                r.errors.push(format!("{key}: unknown key"));
            }
        }
        if r.errors.is_empty() {
            if let Err(mut e) = s.to_mission_config().map(|_| ()) {
                r.errors.append(&mut e);
            }
        }
        if r.errors.is_empty() {
            Ok(s)
        } else {
            Err(ScenarioError::Invalid(r.errors))
        }
    }

    pub fn cuboid(&self) -> Result<Cuboid, String> {
        let mut c = Cuboid::from_center(self.cuboid_center, self.cuboid_dims).map_err(|e| format!("cuboid: {e}"))?;
        for &f in &self.inspectable {
            c.set_inspectable(f, true).map_err(|e| format!("cuboid.inspectable: {e}"))?;
        }
        Ok(c)
    }

    /// Points in canonical order: by face id, then index.
    pub fn feature_points(&self, cuboid: &Cuboid) -> Vec<FeaturePoint> {
        match &self.points {
            PointSpec::Uniform { per_face, seed, faces } => sample_uniform(cuboid, faces, *per_face, *seed),
            PointSpec::Explicit(map) => map
                .iter()
                .flat_map(|(&face_id, list)| {
                    list.iter().enumerate().map(move |(idx, &pos)| FeaturePoint { face_id, idx, pos })
                })
                .collect(),
        }
    }

    /// Builds the mission configuration, collecting every semantic error.
    pub fn to_mission_config(&self) -> Result<MissionConfig, Vec<String>> {
        let mut errors = Vec::new();
        let model = DynamicsModel::new(self.dt, self.mass, self.drag).map_err(|e| errors.push(format!("vehicle: {e}"))).ok();
        let camera = CameraModel::new(self.z0, self.z1, self.d_max).map_err(|e| errors.push(format!("camera: {e}"))).ok();
        let bounds = OperatingBounds {
            workspace_lo: self.workspace_lo,
            workspace_hi: self.workspace_hi,
            v_lo: Vec3::splat(-self.v_max),
            v_hi: Vec3::splat(self.v_max),
            u_lo: Vec3::splat(-self.u_max),
            u_hi: Vec3::splat(self.u_max),
        };
        if let Err(e) = bounds.validate() {
            errors.push(format!("workspace: {e}"));
        }
        let cuboid = self.cuboid().map_err(|e| errors.push(e)).ok();
        let mut points = Vec::new();
        if let Some(c) = &cuboid {
            if self.inspectable.is_empty() {
                errors.push("cuboid.inspectable: no inspectable face".into());
            }
            points = self.feature_points(c);
            for p in &points {
                if let Err(e) = p.validate(c) {
                    errors.push(format!("point {}:{} ({}): {e}", FACE_NAMES[p.face_id], p.idx, p.pos));
                } else if !self.inspectable.contains(&p.face_id) {
                    errors.push(format!("point {}:{}: face is not inspectable", FACE_NAMES[p.face_id], p.idx));
                }
            }
            if points.is_empty() {
                errors.push("points: scenario has no feature points".into());
            }
            if crate::geometry::contains(c, self.start_p) {
                errors.push(format!("start.p: {} is inside the cuboid", self.start_p));
            }
            for ax in crate::geometry::Axis::ALL {
                if c.lo()[ax] < self.workspace_lo[ax] || c.hi()[ax] > self.workspace_hi[ax] {
                    errors.push(format!("cuboid: extends beyond the workspace along {ax}"));
                }
            }
        }
        if errors.is_empty() {
            let start = AgentState::new(self.start_p, self.start_v);
            if !bounds.position_ok(start.p) {
                errors.push(format!("start.p: {} is outside the workspace", start.p));
            }
            if !bounds.velocity_ok(start.v) {
                errors.push(format!("start.v: {} exceeds vehicle.v_max", start.v));
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(MissionConfig {
            model: model.expect("checked"),
            bounds,
            camera: camera.expect("checked"),
            cuboid: cuboid.expect("checked"),
            points,
            start: AgentState::new(self.start_p, self.start_v),
            horizon: self.horizon,
            t_max: self.t_max,
            weight_w: self.weight_w,
            n_tan: self.n_tan,
            solver: SolverConfig { node_limit: self.node_limit, gap_tol: self.gap, ..SolverConfig::default() },
            hold_retry: self.hold_retry,
        })
    }

    /// Canonical text form; parses back to an equal value.
    pub fn to_cfg_string(&self) -> String {
        let v3 = |v: Vec3| format!("[{:?}, {:?}, {:?}]", v.x, v.y, v.z);
        let faces = |ids: &[usize]| {
            let names: Vec<String> = ids.iter().map(|&i| format!("{:?}", FACE_NAMES[i])).collect();
            format!("[{}]", names.join(", "))
        };
        let mut s = String::new();
        let _ = writeln!(s, "workspace.lo = {}", v3(self.workspace_lo));
        let _ = writeln!(s, "workspace.hi = {}", v3(self.workspace_hi));
        let _ = writeln!(s, "cuboid.center = {}", v3(self.cuboid_center));
        let _ = writeln!(s, "cuboid.dims = {}", v3(self.cuboid_dims));
        let _ = writeln!(s, "cuboid.inspectable = {}", faces(&self.inspectable));
        match &self.points {
            PointSpec::Uniform { per_face, seed, faces: fs } => {
                let _ = writeln!(s, "points.sampling = \"uniform\"");
                let _ = writeln!(s, "points.per_face = {per_face}");
                let _ = writeln!(s, "points.seed = {seed}");
                let _ = writeln!(s, "points.faces = {}", faces(fs));
            }
            PointSpec::Explicit(map) => {
                let _ = writeln!(s, "points.sampling = \"explicit\"");
                for (&id, list) in map {
                    let items: Vec<String> = list.iter().map(|&p| v3(p)).collect();
                    let _ = writeln!(s, "points.{} = [{}]", FACE_NAMES[id], items.join(", "));
                }
            }
        }
        let _ = writeln!(s, "vehicle.dt = {:?}", self.dt);
        let _ = writeln!(s, "vehicle.mass = {:?}", self.mass);
        let _ = writeln!(s, "vehicle.drag = {:?}", self.drag);
        let _ = writeln!(s, "vehicle.u_max = {:?}", self.u_max);
        let _ = writeln!(s, "vehicle.v_max = {:?}", self.v_max);
        let _ = writeln!(s, "camera.z0 = {:?}", self.z0);
        let _ = writeln!(s, "camera.z1 = {:?}", self.z1);
        let _ = writeln!(s, "camera.d_max = {:?}", self.d_max);
        let _ = writeln!(s, "mission.horizon = {}", self.horizon);
        let _ = writeln!(s, "mission.t_max = {}", self.t_max);
        let _ = writeln!(s, "mission.w = {:?}", self.weight_w);
        let _ = writeln!(s, "mission.n_tan = {}", self.n_tan);
        let _ = writeln!(s, "mission.hold_retry = {}", self.hold_retry);
        let _ = writeln!(s, "start.p = {}", v3(self.start_p));
        let _ = writeln!(s, "start.v = {}", v3(self.start_v));
        let _ = writeln!(s, "solver.gap = {:?}", self.gap);
        let _ = writeln!(s, "solver.node_limit = {}", self.node_limit);
        s
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ScenarioFile::parse(&text)
}

/// `per_face` points drawn uniformly over each face rectangle, faces in id order.
pub fn sample_uniform(cuboid: &Cuboid, faces: &[usize], per_face: usize, seed: u64) -> Vec<FeaturePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = faces.to_vec();
    ids.sort_unstable();
    let mut out = Vec::new();
    for id in ids {
        let Ok(f) = cuboid.face(id) else { continue };
        for idx in 0..per_face {
            let a = rng.gen_range(f.rect_lo[0]..=f.rect_hi[0]);
            let b = rng.gen_range(f.rect_lo[1]..=f.rect_hi[1]);
            out.push(FeaturePoint { face_id: id, idx, pos: f.lift([a, b]) });
        }
    }
    out
}

/// One row of `trajectory.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub p: Vec3,
    pub v: Vec3,
    pub u: Vec3,
    pub viewed_face: Option<usize>,
    pub footprint_side: Option<f64>,
    pub inspected: Vec<(usize, usize)>,
    pub inspected_total: usize,
    pub solve_time: f64,
    pub nodes: usize,
    pub plan_objective: Option<f64>,
    pub held: bool,
}

/// One planned state in `plans.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub t: usize,
    pub tau: usize,
    pub p: Vec3,
    pub v: Vec3,
    pub u: Vec3,
    pub planned: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTimeStats {
    pub mean: f64,
    pub max: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionSummary {
    pub status: MissionStatus,
    pub steps: usize,
    pub inspected: usize,
    pub total_points: usize,
    pub abort_reason: Option<String>,
    pub solve_time: SolveTimeStats,
    pub total_nodes: usize,
    pub start_p: Vec3,
    pub start_v: Vec3,
}

pub fn summarize(log: &MissionLog) -> MissionSummary {
    let times: Vec<f64> = log.records.iter().map(|r| r.solve_time).collect();
    let total: f64 = times.iter().sum();
    MissionSummary {
        status: log.status,
        steps: log.steps(),
        inspected: log.inspected(),
        total_points: log.total_points,
        abort_reason: log.abort_reason.clone(),
        solve_time: SolveTimeStats {
            mean: if times.is_empty() { 0.0 } else { total / times.len() as f64 },
            max: times.iter().copied().fold(0.0, f64::max),
            total,
        },
        total_nodes: log.records.iter().map(|r| r.nodes).sum(),
        start_p: log.start.p,
        start_v: log.start.v,
    }
}

fn ids_to_string(ids: &[(usize, usize)]) -> String {
    ids.iter().map(|(f, i)| format!("{f}:{i}")).collect::<Vec<_>>().join(";")
}

fn ids_from_string(s: &str) -> Result<Vec<(usize, usize)>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|item| {
            let (f, i) = item.split_once(':').ok_or_else(|| format!("bad point id {item:?}"))?;
            Ok((f.parse().map_err(|_| format!("bad face in {item:?}"))?, i.parse().map_err(|_| format!("bad index in {item:?}"))?))
        })
        .collect()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const TRAJECTORY_HEADER: [&str; 20] = [
    "t", "px", "py", "pz", "vx", "vy", "vz", "ux", "uy", "uz", "viewed_face", "footprint_side", "inspected",
    "inspected_total", "solve_time", "nodes", "plan_objective", "held", "target", "status",
];

/// Writes `scenario.cfg`, `points.csv`, `trajectory.csv`, `plans.csv`,
/// `footprints.csv` and `summary.json` into `dir`.
pub fn write_log(log: &MissionLog, scenario: &ScenarioFile, cfg: &MissionConfig, dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("scenario.cfg");
    fs::write(&path, scenario.to_cfg_string()).map_err(io_err(&path))?;

    let csv_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e: csv::Error| ScenarioError::BadLog { path: p.clone(), detail: e.to_string() }
    };

    let path = dir.join("points.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["face_id", "face", "idx", "x", "y", "z"]).map_err(csv_err(&path))?;
    for p in &cfg.points {
        w.write_record([
            p.face_id.to_string(),
            FACE_NAMES[p.face_id].to_string(),
            p.idx.to_string(),
            p.pos.x.to_string(),
            p.pos.y.to_string(),
            p.pos.z.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("trajectory.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err(&path))?;
    for r in &log.records {
        let s = &r.state;
        w.write_record([
            r.t.to_string(),
            s.p.x.to_string(),
            s.p.y.to_string(),
            s.p.z.to_string(),
            s.v.x.to_string(),
            s.v.y.to_string(),
            s.v.z.to_string(),
            r.control.x.to_string(),
            r.control.y.to_string(),
            r.control.z.to_string(),
            opt(r.viewed_face),
            opt(r.footprint_side),
            ids_to_string(&r.newly_inspected),
            r.inspected_total.to_string(),
            r.solve_time.to_string(),
            r.nodes.to_string(),
            opt(r.plan.as_ref().map(|p| p.objective)),
            r.held.to_string(),
            r.target.map(|(f, i)| format!("{f}:{i}")).unwrap_or_default(),
            r.plan.as_ref().map(|p| format!("{:?}", p.status).to_lowercase()).unwrap_or_default(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("plans.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["t", "tau", "px", "py", "pz", "vx", "vy", "vz", "ux", "uy", "uz", "planned"]).map_err(csv_err(&path))?;
    for r in &log.records {
        let Some(plan) = &r.plan else { continue };
        for (tau, (x, u)) in plan.states.iter().zip(&plan.controls).enumerate() {
            let planned: Vec<_> =
                plan.planned_inspections.iter().filter(|e| e.0 == tau).map(|e| (e.1, e.2)).collect();
            w.write_record([
                r.t.to_string(),
                tau.to_string(),
                x.p.x.to_string(),
                x.p.y.to_string(),
                x.p.z.to_string(),
                x.v.x.to_string(),
                x.v.y.to_string(),
                x.v.z.to_string(),
                u.x.to_string(),
                u.y.to_string(),
                u.z.to_string(),
                ids_to_string(&planned),
            ])
            .map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("footprints.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["t", "face_id", "face", "center_a", "center_b", "side"]).map_err(csv_err(&path))?;
    for r in &log.records {
        let Some(fid) = r.viewed_face else { continue };
        let f = cfg.cuboid.face(fid).expect("viewed face comes from the cuboid");
        let fp = crate::sensing::footprint(&cfg.camera, f, r.state.p);
        w.write_record([
            r.t.to_string(),
            fid.to_string(),
            FACE_NAMES[fid].to_string(),
            fp.center[0].to_string(),
            fp.center[1].to_string(),
            fp.side.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summarize(log)).expect("summary serializes");
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path, row: usize) -> Result<T, ScenarioError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| ScenarioError::BadLog { path: path.to_path_buf(), detail: format!("row {row}, column {i}: cannot parse {raw:?}") })
}

fn opt_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path, row: usize) -> Result<Option<T>, ScenarioError> {
    if rec.get(i).unwrap_or("").is_empty() {
        Ok(None)
    } else {
        field(rec, i, path, row).map(Some)
    }
}

fn vec_at(rec: &csv::StringRecord, i: usize, path: &Path, row: usize) -> Result<Vec3, ScenarioError> {
    Ok(Vec3::new(field(rec, i, path, row)?, field(rec, i + 1, path, row)?, field(rec, i + 2, path, row)?))
}

fn ids_at(rec: &csv::StringRecord, i: usize, path: &Path, row: usize) -> Result<Vec<(usize, usize)>, ScenarioError> {
    ids_from_string(rec.get(i).unwrap_or(""))
        .map_err(|d| ScenarioError::BadLog { path: path.to_path_buf(), detail: format!("row {row}: {d}") })
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRecord>, ScenarioError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| ScenarioError::BadLog { path: path.to_path_buf(), detail: e.to_string() })?;
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| ScenarioError::BadLog { path: path.to_path_buf(), detail: e.to_string() })?;
        out.push(TrajectoryRecord {
            t: field(&rec, 0, path, row)?,
            p: vec_at(&rec, 1, path, row)?,
            v: vec_at(&rec, 4, path, row)?,
            u: vec_at(&rec, 7, path, row)?,
            viewed_face: opt_field(&rec, 10, path, row)?,
            footprint_side: opt_field(&rec, 11, path, row)?,
            inspected: ids_at(&rec, 12, path, row)?,
            inspected_total: field(&rec, 13, path, row)?,
            solve_time: field(&rec, 14, path, row)?,
            nodes: field(&rec, 15, path, row)?,
            plan_objective: opt_field(&rec, 16, path, row)?,
            held: field(&rec, 17, path, row)?,
        });
    }
    Ok(out)
}

pub fn read_plans(path: &Path) -> Result<Vec<PlanRecord>, ScenarioError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| ScenarioError::BadLog { path: path.to_path_buf(), detail: e.to_string() })?;
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| ScenarioError::BadLog { path: path.to_path_buf(), detail: e.to_string() })?;
        out.push(PlanRecord {
            t: field(&rec, 0, path, row)?,
            tau: field(&rec, 1, path, row)?,
            p: vec_at(&rec, 2, path, row)?,
            v: vec_at(&rec, 5, path, row)?,
            u: vec_at(&rec, 8, path, row)?,
            planned: ids_at(&rec, 11, path, row)?,
        });
    }
    Ok(out)
}

pub fn read_summary(path: &Path) -> Result<MissionSummary, ScenarioError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ScenarioError::BadLog { path: path.to_path_buf(), detail: e.to_string() })
}
