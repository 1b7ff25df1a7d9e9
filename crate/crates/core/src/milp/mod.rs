//! Mixed-integer linear programming over continuous and binary variables:
//! a model container, a dense bounded simplex for relaxations, and a
//! deterministic best-bound branch and bound.

mod bnb;
pub mod lp_format;
mod model;
mod presolve;
mod simplex;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::Heuristic;
pub use model::{Constraint, MilpModel, Sense, VarId, VarKind, Variable};

/// Row and bound tolerance that every returned optimal point satisfies.
pub const EPS_LP: f64 = 1e-6;
/// Distance from {0, 1} accepted as integral.
pub const EPS_INT: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("unknown variable {0}")]
    UnknownVar(VarId),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid bounds for {name}: [{lo}, {hi}]")]
    BadBounds { name: String, lo: f64, hi: f64 },
    #[error("indicator variable {0} is not binary")]
    NotBinary(String),
    #[error("big-M for {name} is {big_m}, must be positive and at least {required:?}")]
    BadBigM { name: String, big_m: f64, required: Option<f64> },
    #[error("piecewise-linear term {0} has no tangents")]
    EmptyTangents(String),
    #[error("model has {count} binaries, enumeration is limited to {limit}")]
    TooManyBinaries { count: usize, limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node budget exhausted; `values` holds the incumbent if one was found.
    NodeLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub node_limit: usize,
    /// Absolute optimality gap at which a node is pruned.
    pub gap_tol: f64,
    pub int_tol: f64,
    /// Bytes of simplex tableaux kept alive for warm-starting open nodes.
    pub tableau_budget: usize,
    /// Heuristic is called at the root, at every node until an incumbent
    /// exists, then every `heuristic_period` nodes (0 disables the periodic calls).
    pub heuristic_period: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            node_limit: 200_000,
            gap_tol: 1e-6,
            int_tol: EPS_INT,
            tableau_budget: 1 << 30,
            heuristic_period: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Indexed by `VarId`; empty when no feasible point is known.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Lower bound on the optimum proven by the search.
    pub best_bound: f64,
    pub nodes_explored: usize,
    pub solve_time: f64,
    /// `(node count, objective)` each time the incumbent improved.
    pub incumbent_trace: Vec<(usize, f64)>,
}

impl MilpSolution {
    pub fn has_values(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    fn without_values(status: SolveStatus, nodes: usize, start: Instant) -> Self {
        let objective = match status {
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        Self {
            status,
            values: Vec::new(),
            objective,
            best_bound: objective,
            nodes_explored: nodes,
            solve_time: start.elapsed().as_secs_f64(),
            incumbent_trace: Vec::new(),
        }
    }
}

/// Solves the continuous relaxation (binaries treated as `[lo, hi]` boxes).
pub fn solve_lp(m: &MilpModel) -> MilpSolution {
    let start = Instant::now();
    let pre = match presolve::presolve(m) {
        Ok(p) => p,
        Err(presolve::Infeasible) => return MilpSolution::without_values(SolveStatus::Infeasible, 0, start),
    };
    let mut tab = simplex::Tableau::cold(&pre.data);
    match tab.solve(&pre.data) {
        simplex::LpStatus::Optimal => {
            let values = pre.expand(tab.structural_values());
            let objective = m.evaluate_objective(&values);
            MilpSolution {
                status: SolveStatus::Optimal,
                values,
                objective,
                best_bound: objective,
                nodes_explored: 0,
                solve_time: start.elapsed().as_secs_f64(),
                incumbent_trace: Vec::new(),
            }
        }
        simplex::LpStatus::Unbounded => MilpSolution::without_values(SolveStatus::Unbounded, 0, start),
        // an LP that stalls is reported without values; callers treat it as no solution
        simplex::LpStatus::Infeasible | simplex::LpStatus::IterationLimit => {
            MilpSolution::without_values(SolveStatus::Infeasible, 0, start)
        }
    }
}

pub fn solve_milp(m: &MilpModel, cfg: &SolverConfig) -> MilpSolution {
    bnb::branch_and_bound(m, cfg, None)
}

pub fn solve_milp_with_heuristic(m: &MilpModel, cfg: &SolverConfig, h: &mut dyn Heuristic) -> MilpSolution {
    bnb::branch_and_bound(m, cfg, Some(h))
}
