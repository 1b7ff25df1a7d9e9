//! Runtime sweeps over point counts and horizon lengths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{run_mission, MissionStatus};
use crate::scenario::{PointSpec, ScenarioFile};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("{points} points cannot be split evenly over {faces} inspectable faces")]
    UnevenPoints { points: usize, faces: usize },
    #[error("bench needs at least one point count, horizon and trial")]
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub points: Vec<usize>,
    pub horizons: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

/// One mission of a cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub status: Option<MissionStatus>,
    pub steps: usize,
    pub inspected: usize,
    pub nodes: usize,
    pub solve_times: Vec<f64>,
    pub error: Option<String>,
}

/// Aggregate over the trials of one `(points, horizon)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub points: usize,
    pub horizon: usize,
    pub trials: usize,
    pub completed: usize,
    pub failures: usize,
    pub mean_steps: f64,
    pub total_nodes: usize,
    /// Mean over every solve of every trial (s).
    pub mean_solve_time: f64,
    pub max_solve_time: f64,
    pub outcomes: Vec<TrialOutcome>,
}

impl BenchRow {
    /// Columns that do not depend on wall-clock time.
    pub fn deterministic(&self) -> (usize, usize, usize, usize, usize, String, usize) {
        (self.points, self.horizon, self.trials, self.completed, self.failures, format!("{:?}", self.mean_steps), self.total_nodes)
    }
}

pub const TABLE_HEADER: [&str; 9] =
    ["points", "horizon", "trials", "completed", "failures", "mean_steps", "total_nodes", "mean_solve_time_s", "max_solve_time_s"];

/// Seed of trial `k` of a cell; distinct per cell and trial.
pub fn trial_seed(base: u64, points: usize, horizon: usize, trial: usize) -> u64 {
    base ^ ((points as u64) << 40) ^ ((horizon as u64) << 24) ^ trial as u64
}

/// Runs every cell in order. A failing trial is recorded and the sweep continues.
pub fn run_bench(base: &ScenarioFile, spec: &BenchSpec, mut on_trial: impl FnMut(usize, usize, &TrialOutcome)) -> Result<Vec<BenchRow>, BenchError> {
    if spec.points.is_empty() || spec.horizons.is_empty() || spec.trials == 0 {
        return Err(BenchError::Empty);
    }
    let faces = base.inspectable.clone();
    for &n in &spec.points {
        if faces.is_empty() || n % faces.len() != 0 {
            return Err(BenchError::UnevenPoints { points: n, faces: faces.len() });
        }
    }
    let mut rows = Vec::new();
    for &n in &spec.points {
        for &h in &spec.horizons {
            let mut outcomes = Vec::with_capacity(spec.trials);
            for k in 0..spec.trials {
                let seed = trial_seed(spec.seed, n, h, k);
                let mut sc = base.clone();
                sc.horizon = h;
                sc.points = PointSpec::Uniform { per_face: n / faces.len(), seed, faces: faces.clone() };
                let out = run_trial(&sc, seed);
                on_trial(n, h, &out);
                outcomes.push(out);
            }
            rows.push(aggregate(n, h, outcomes));
        }
    }
    Ok(rows)
}

fn run_trial(sc: &ScenarioFile, seed: u64) -> TrialOutcome {
    let mut out = TrialOutcome { seed, status: None, steps: 0, inspected: 0, nodes: 0, solve_times: Vec::new(), error: None };
    let cfg = match sc.to_mission_config() {
        Ok(c) => c,
        Err(e) => {
            out.error = Some(e.join("; "));
            return out;
        }
    };
    match run_mission(&cfg) {
        Ok(log) => {
            out.status = Some(log.status);
            out.steps = log.steps();
            out.inspected = log.inspected();
            out.nodes = log.records.iter().map(|r| r.nodes).sum();
            out.solve_times = log.records.iter().map(|r| r.solve_time).collect();
            out.error = log.abort_reason;
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

fn aggregate(points: usize, horizon: usize, outcomes: Vec<TrialOutcome>) -> BenchRow {
    let times: Vec<f64> = outcomes.iter().flat_map(|o| o.solve_times.iter().copied()).collect();
    let completed = outcomes.iter().filter(|o| o.status == Some(MissionStatus::Complete)).count();
    BenchRow {
        points,
        horizon,
        trials: outcomes.len(),
        completed,
        failures: outcomes.len() - completed,
        mean_steps: outcomes.iter().map(|o| o.steps as f64).sum::<f64>() / outcomes.len() as f64,
        total_nodes: outcomes.iter().map(|o| o.nodes).sum(),
        mean_solve_time: if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 },
        max_solve_time: times.iter().copied().fold(0.0, f64::max),
        outcomes,
    }
}

pub fn table_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.points.to_string(),
            r.horizon.to_string(),
            r.trials.to_string(),
            r.completed.to_string(),
            r.failures.to_string(),
            r.mean_steps.to_string(),
            r.total_nodes.to_string(),
            r.mean_solve_time.to_string(),
            r.max_solve_time.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
