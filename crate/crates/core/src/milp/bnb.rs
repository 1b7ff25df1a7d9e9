//! Best-bound branch and bound over binary columns of the presolved LP.
//!
//! Open nodes keep either a shared copy of their parent's optimal tableau
//! (while the byte budget allows) or just its basis; children re-optimise
//! with the dual simplex after the branching bound change.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::model::{MilpModel, VarId};
use super::presolve::{self, Presolved};
use super::simplex::{BasisSnapshot, LpStatus, Tableau};
use super::{MilpSolution, SolveStatus, SolverConfig, EPS_LP};

/// Branching decisions `(column, lo, hi)` from the root to a node.
type BoundPath = Rc<Vec<(usize, f64, f64)>>;

/// Proposes binary fixings from a relaxation point; the solver completes the
/// continuous part with an LP and keeps the result if it is integral.
pub trait Heuristic {
    /// `lp_values` is indexed by `VarId`.
    fn propose(&mut self, model: &MilpModel, lp_values: &[f64]) -> Option<Vec<(VarId, f64)>>;
}

struct Held {
    tab: Tableau,
    live: Rc<Cell<usize>>,
}

impl Drop for Held {
    fn drop(&mut self) {
        self.live.set(self.live.get() - self.tab.bytes());
    }
}

enum Warm {
    Tableau(Rc<Held>),
    Basis(Rc<BasisSnapshot>),
}

struct Node {
    id: usize,
    bound: f64,
    /// Cumulative `(column, lo, hi)` branching decisions from the root.
    path: BoundPath,
    warm: Warm,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    /// Max-heap order: lowest bound first, then highest id.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(self.id.cmp(&o.id))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    cfg: &'a SolverConfig,
    pre: Presolved,
    incumbent: Option<(f64, Vec<f64>)>,
    trace: Vec<(usize, f64)>,
    nodes: usize,
}

impl<'a> Search<'a> {
    fn accept(&mut self, values: Vec<f64>) {
        if self.model.max_violation(&values) > EPS_LP || !self.model.is_integral(&values, self.cfg.int_tol) {
            return;
        }
        let obj = self.model.evaluate_objective(&values);
        let better = self.incumbent.as_ref().is_none_or(|(best, _)| obj < *best - 1e-12);
        if better {
            self.trace.push((self.nodes, obj));
            self.incumbent = Some((obj, values));
        }
    }

    fn cutoff(&self) -> f64 {
        self.incumbent.as_ref().map_or(f64::INFINITY, |(best, _)| best - self.cfg.gap_tol)
    }

    /// Re-solve with every binary pinned to its rounded value.
    fn polish(&mut self, tab: &Tableau) {
        let mut t = tab.clone();
        for (k, &is_bin) in self.pre.binary.iter().enumerate() {
            if is_bin {
                let r = t.x[k].round();
                t.set_bounds(k, r, r);
            }
        }
        if t.solve(&self.pre.data) == LpStatus::Optimal {
            let mut values = self.pre.expand(t.structural_values());
            self.snap_binaries(&mut values);
            self.accept(values);
        }
    }

    fn snap_binaries(&self, values: &mut [f64]) {
        for &j in &self.pre.orig_of {
            if self.model.vars()[j].kind == super::VarKind::Binary {
                values[j] = values[j].round();
            }
        }
    }

    fn run_heuristic(&mut self, h: &mut dyn Heuristic, root: &Tableau, lp_values: &[f64]) {
        let Some(fixings) = h.propose(self.model, lp_values) else {
            return;
        };
        let mut t = root.clone();
        let mut col_of = vec![usize::MAX; self.model.num_vars()];
        for (k, &j) in self.pre.orig_of.iter().enumerate() {
            col_of[j] = k;
        }
        for (v, val) in fixings {
            let k = col_of.get(v.0).copied().unwrap_or(usize::MAX);
            if k == usize::MAX {
                if (self.pre.fixed.get(v.0).copied().unwrap_or(f64::NAN) - val).abs() > self.cfg.int_tol {
                    return;
                }
                continue;
            }
            if val < t.lo[k] || val > t.hi[k] {
                return;
            }
            t.set_bounds(k, val, val);
        }
        if t.solve(&self.pre.data) != LpStatus::Optimal {
            return;
        }
        let fractional = self
            .pre
            .binary
            .iter()
            .enumerate()
            .any(|(k, &b)| b && (t.x[k] - t.x[k].round()).abs() > self.cfg.int_tol);
        if fractional {
            self.polish(&t);
        } else {
            let mut values = self.pre.expand(t.structural_values());
            self.snap_binaries(&mut values);
            self.accept(values);
        }
    }

    /// Most fractional binary column, ties to the lowest index.
    fn branching_column(&self, tab: &Tableau) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &is_bin) in self.pre.binary.iter().enumerate() {
            if !is_bin {
                continue;
            }
            let f = (tab.x[k] - tab.x[k].round()).abs();
            if f > self.cfg.int_tol && best.is_none_or(|(_, bf)| f > bf) {
                best = Some((k, f));
            }
        }
        best.map(|(k, _)| k)
    }
}

pub(crate) fn branch_and_bound(
    model: &MilpModel,
    cfg: &SolverConfig,
    mut heuristic: Option<&mut dyn Heuristic>,
) -> MilpSolution {
    let start = Instant::now();
    let pre = match presolve::presolve(model) {
        Ok(p) => p,
        Err(presolve::Infeasible) => return MilpSolution::without_values(SolveStatus::Infeasible, 0, start),
    };
    let mut root = Tableau::cold(&pre.data);
    let root_status = root.solve(&pre.data);
    let mut search = Search { model, cfg, pre, incumbent: None, trace: Vec::new(), nodes: 1 };
    match root_status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => return MilpSolution::without_values(SolveStatus::Unbounded, 1, start),
        _ => return MilpSolution::without_values(SolveStatus::Infeasible, 1, start),
    }
    let root_values = search.pre.expand(root.structural_values());
    let root_bound = model.evaluate_objective(&root_values);
    if let Some(h) = heuristic.as_deref_mut() {
        search.run_heuristic(h, &root, &root_values);
    }

    let live = Rc::new(Cell::new(0usize));
    let mut open = BinaryHeap::new();
    let mut next_id = 0usize;
    let mut lost_nodes = false;
    // the root is processed through the same path as every other node
    let mut pending: Option<(Tableau, f64, BoundPath)> = Some((root.clone(), root_bound, Rc::new(Vec::new())));
    let mut first = true;

    loop {
        let (tab, bound, path) = match pending.take() {
            Some(p) => p,
            None => {
                if search.nodes >= cfg.node_limit {
                    break;
                }
                let Some(node) = open.pop() else { break };
                let node: Node = node;
                if node.bound >= search.cutoff() {
                    continue;
                }
                let &(col, lo, hi) = node.path.last().expect("non-root node has a branching decision");
                let mut tab = match &node.warm {
                    Warm::Tableau(held) => {
                        let mut t = held.tab.clone();
                        t.set_bounds(col, lo, hi);
                        t
                    }
                    Warm::Basis(snap) => {
                        let mut t = Tableau::from_snapshot(&search.pre.data, snap);
                        for &(c, l, h) in node.path.iter() {
                            t.set_bounds(c, l, h);
                        }
                        t
                    }
                };
                drop(node.warm);
                search.nodes += 1;
                let status = match tab.solve(&search.pre.data) {
                    LpStatus::IterationLimit => {
                        let mut cold = Tableau::cold(&search.pre.data);
                        for &(c, l, h) in node.path.iter() {
                            cold.set_bounds(c, l, h);
                        }
                        tab = cold;
                        tab.solve(&search.pre.data)
                    }
                    s => s,
                };
                match status {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => continue,
                    _ => {
                        lost_nodes = true;
                        continue;
                    }
                }
                let values = search.pre.expand(tab.structural_values());
                let obj = model.evaluate_objective(&values);
                (tab, obj, node.path)
            }
        };
        if !first {
            let period_due = cfg.heuristic_period > 0 && search.nodes.is_multiple_of(cfg.heuristic_period);
            if search.incumbent.is_none() || period_due {
                if let Some(h) = heuristic.as_deref_mut() {
                    let values = search.pre.expand(tab.structural_values());
                    search.run_heuristic(h, &tab, &values);
                }
            }
        }
        first = false;
        if bound >= search.cutoff() {
            continue;
        }
        let Some(col) = search.branching_column(&tab) else {
            let mut values = search.pre.expand(tab.structural_values());
            search.snap_binaries(&mut values);
            let before = search.incumbent.as_ref().map(|(o, _)| *o);
            search.accept(values);
            if search.incumbent.as_ref().map(|(o, _)| *o) == before {
                search.polish(&tab);
            }
            continue;
        };
        let mut down = (*path).clone();
        down.push((col, tab.lo[col], 0.0));
        let mut up = (*path).clone();
        up.push((col, 1.0, tab.hi[col]));
        let shared = if live.get() + tab.bytes() <= cfg.tableau_budget {
            live.set(live.get() + tab.bytes());
            let held = Rc::new(Held { tab, live: Rc::clone(&live) });
            (Warm::Tableau(Rc::clone(&held)), Warm::Tableau(held))
        } else {
            let snap = Rc::new(tab.snapshot());
            (Warm::Basis(Rc::clone(&snap)), Warm::Basis(snap))
        };
        open.push(Node { id: next_id, bound, path: Rc::new(down), warm: shared.0 });
        open.push(Node { id: next_id + 1, bound, path: Rc::new(up), warm: shared.1 });
        next_id += 2;
    }

    let open_bound = open.iter().map(|n: &Node| n.bound).fold(f64::INFINITY, f64::min);
    let exhausted = open.iter().all(|n| n.bound >= search.cutoff());
    let nodes = search.nodes;
    let solve_time = start.elapsed().as_secs_f64();
    let trace = std::mem::take(&mut search.trace);
    match search.incumbent.take() {
        Some((obj, values)) => {
            let status = if exhausted && !lost_nodes { SolveStatus::Optimal } else { SolveStatus::NodeLimit };
            MilpSolution {
                status,
                values,
                objective: obj,
                best_bound: if status == SolveStatus::Optimal { obj } else { open_bound.min(obj) },
                nodes_explored: nodes,
                solve_time,
                incumbent_trace: trace,
            }
        }
        None if exhausted && !lost_nodes => MilpSolution::without_values(SolveStatus::Infeasible, nodes, start),
        None => {
            let mut s = MilpSolution::without_values(SolveStatus::NodeLimit, nodes, start);
            s.best_bound = open_bound;
            s
        }
    }
}
