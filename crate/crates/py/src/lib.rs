//! Python bindings: scenarios, missions, log validation and the MILP solver.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cuboid_inspect::controller::{run_mission, MissionConfig, MissionLog, MissionStatus};
use cuboid_inspect::geometry::Vec3;
use cuboid_inspect::milp::{self, MilpModel, Sense, SolveStatus, SolverConfig, VarId};
use cuboid_inspect::scenario::{self as sio, ScenarioError, ScenarioFile};
use cuboid_inspect::sensing::inspects;
use cuboid_inspect::validate::{validate, LogView, ValidateOptions};
use cuboid_inspect::vehicle::{step, AgentState, DynamicsModel};

fn scenario_err(e: ScenarioError) -> PyErr {
    match e {
        ScenarioError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::from_array(a)
}

fn status_name(s: MissionStatus) -> &'static str {
    match s {
        MissionStatus::Complete => "complete",
        MissionStatus::Timeout => "timeout",
        MissionStatus::Infeasible => "infeasible",
    }
}

fn solve_status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::NodeLimit => "node_limit",
    }
}

/// A validated scenario.
#[pyclass(name = "Scenario", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    file: ScenarioFile,
    cfg: MissionConfig,
}

impl PyScenario {
    fn from_file(file: ScenarioFile) -> PyResult<Self> {
        let cfg = file.to_mission_config().map_err(|e| PyValueError::new_err(e.join("; ")))?;
        Ok(Self { file, cfg })
    }
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Self::from_file(ScenarioFile::parse(text).map_err(scenario_err)?)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Self::from_file(sio::load_scenario(&path).map_err(scenario_err)?)
    }

    /// Full-size scenario: 20 points, horizon 5.
    #[staticmethod]
    fn full() -> PyResult<Self> {
        Self::parse(sio::FULL_SCENARIO)
    }

    /// Small scenario: 8 points, horizon 3.
    #[staticmethod]
    fn reduced() -> PyResult<Self> {
        Self::parse(sio::REDUCED_SCENARIO)
    }

    fn to_cfg(&self) -> String {
        self.file.to_cfg_string()
    }

    /// Copy with a different horizon, point seed and/or mission length.
    #[pyo3(signature = (horizon=None, seed=None, t_max=None))]
    fn with_overrides(&self, horizon: Option<usize>, seed: Option<u64>, t_max: Option<usize>) -> PyResult<Self> {
        let mut f = self.file.clone();
        if let Some(h) = horizon {
            f.horizon = h;
        }
        if let Some(t) = t_max {
            f.t_max = t;
        }
        if let (Some(s), sio::PointSpec::Uniform { seed, .. }) = (seed, &mut f.points) {
            *seed = s;
        }
        Self::from_file(f)
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    #[getter]
    fn t_max(&self) -> usize {
        self.cfg.t_max
    }

    #[getter]
    fn start(&self) -> ([f64; 3], [f64; 3]) {
        (self.cfg.start.p.to_array(), self.cfg.start.v.to_array())
    }

    /// `(face_id, idx, (x, y, z))` for every feature point.
    fn points(&self) -> Vec<(usize, usize, [f64; 3])> {
        self.cfg.points.iter().map(|p| (p.face_id, p.idx, p.pos.to_array())).collect()
    }

    /// Keys of the points the camera inspects from position `p`.
    fn inspected_from(&self, p: [f64; 3]) -> Vec<(usize, usize)> {
        let p = v3(p);
        self.cfg
            .points
            .iter()
            .filter(|pt| inspects(&self.cfg.camera, self.cfg.cuboid.face(pt.face_id).expect("validated point"), p, pt))
            .map(|pt| pt.key())
            .collect()
    }

    /// One step of the vehicle dynamics.
    fn step(&self, p: [f64; 3], v: [f64; 3], u: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let s = step(&self.cfg.model, &AgentState::new(v3(p), v3(v)), v3(u));
        (s.p.to_array(), s.v.to_array())
    }

    /// Flies the mission; the interpreter lock is released while planning.
    fn run(&self, py: Python<'_>) -> PyResult<PyMissionLog> {
        let cfg = self.cfg.clone();
        let log = py.detach(move || run_mission(&cfg)).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMissionLog { log, scenario: self.clone() })
    }

    fn __repr__(&self) -> String {
        format!("Scenario(points={}, horizon={}, t_max={})", self.cfg.points.len(), self.cfg.horizon, self.cfg.t_max)
    }
}

/// Result of [`PyScenario::run`].
#[pyclass(name = "MissionLog", skip_from_py_object)]
struct PyMissionLog {
    log: MissionLog,
    scenario: PyScenario,
}

#[pymethods]
impl PyMissionLog {
    #[getter]
    fn status(&self) -> &'static str {
        status_name(self.log.status)
    }

    #[getter]
    fn steps(&self) -> usize {
        self.log.steps()
    }

    #[getter]
    fn inspected(&self) -> usize {
        self.log.inspected()
    }

    #[getter]
    fn total_points(&self) -> usize {
        self.log.total_points
    }

    #[getter]
    fn abort_reason(&self) -> Option<String> {
        self.log.abort_reason.clone()
    }

    /// One dict per realized step.
    fn trajectory<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.log
            .records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("t", r.t)?;
                d.set_item("p", r.state.p.to_array())?;
                d.set_item("v", r.state.v.to_array())?;
                d.set_item("u", r.control.to_array())?;
                d.set_item("inspected", r.newly_inspected.clone())?;
                d.set_item("inspected_total", r.inspected_total)?;
                d.set_item("viewed_face", r.viewed_face)?;
                d.set_item("nodes", r.nodes)?;
                d.set_item("solve_time", r.solve_time)?;
                Ok(d)
            })
            .collect()
    }

    /// Writes the log files into `dir`.
    fn write(&self, dir: PathBuf) -> PyResult<()> {
        sio::write_log(&self.log, &self.scenario.file, &self.scenario.cfg, &dir).map_err(scenario_err)
    }

    /// `{check name: list of violating steps}`; empty lists mean the check passed.
    #[pyo3(signature = (grid_check=false))]
    fn validate(&self, grid_check: bool) -> Vec<(String, Vec<usize>)> {
        let view = LogView::from_log(&self.log);
        validate(&self.scenario.cfg, &view, ValidateOptions { grid_check })
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.steps()))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("MissionLog(status={}, steps={}, inspected={}/{})", self.status(), self.steps(), self.inspected(), self.total_points())
    }
}

/// Mixed-binary linear program, minimized.
#[pyclass(name = "MilpModel", skip_from_py_object)]
#[derive(Default)]
struct PyMilpModel {
    model: MilpModel,
}

fn milp_err(e: milp::MilpError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pymethods]
impl PyMilpModel {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Returns the variable index.
    #[pyo3(signature = (name, lo=f64::NEG_INFINITY, hi=f64::INFINITY))]
    fn add_continuous(&mut self, name: &str, lo: f64, hi: f64) -> PyResult<usize> {
        self.model.add_continuous(name, lo, hi).map(|v| v.0).map_err(milp_err)
    }

    fn add_binary(&mut self, name: &str) -> usize {
        self.model.add_binary(name).0
    }

    /// `sense` is one of `"<="`, `">="`, `"=="`.
    fn add_constraint(&mut self, name: &str, coeffs: Vec<(usize, f64)>, sense: &str, rhs: f64) -> PyResult<()> {
        let sense = match sense {
            "<=" => Sense::Le,
            ">=" => Sense::Ge,
            "==" | "=" => Sense::Eq,
            other => return Err(PyValueError::new_err(format!("unknown sense {other:?}"))),
        };
        let coeffs: Vec<(VarId, f64)> = coeffs.into_iter().map(|(v, a)| (VarId(v), a)).collect();
        self.model.add_constraint(name, &coeffs, sense, rhs).map(|_| ()).map_err(milp_err)
    }

    fn set_objective(&mut self, coeffs: Vec<(usize, f64)>) -> PyResult<()> {
        for (v, c) in coeffs {
            if v >= self.model.num_vars() {
                return Err(PyIndexError::new_err(format!("no variable {v}")));
            }
            self.model.set_objective_coeff(VarId(v), c).map_err(milp_err)?;
        }
        Ok(())
    }

    /// `(status, objective, values)`; values are empty without a solution.
    #[pyo3(signature = (node_limit=200_000))]
    fn solve(&self, py: Python<'_>, node_limit: usize) -> (&'static str, f64, Vec<f64>) {
        let cfg = SolverConfig { node_limit, ..SolverConfig::default() };
        let sol = py.detach(|| milp::solve_milp(&self.model, &cfg));
        (solve_status_name(sol.status), sol.objective, sol.values)
    }

    fn to_lp(&self) -> String {
        milp::lp_format::write_lp(&self.model)
    }
}

/// Scalar dynamics coefficients `(alpha, beta)` for the given parameters.
#[pyfunction]
fn dynamics_coefficients(dt: f64, mass: f64, drag: f64) -> PyResult<(f64, f64)> {
    let m = DynamicsModel::new(dt, mass, drag).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((m.alpha(), m.beta()))
}

#[pymodule]
fn cuboid_inspect_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyMissionLog>()?;
    m.add_class::<PyMilpModel>()?;
    m.add_function(wrap_pyfunction!(dynamics_coefficients, m)?)?;
    Ok(())
}
