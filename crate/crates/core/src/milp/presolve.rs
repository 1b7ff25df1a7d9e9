//! Fixed-variable substitution followed by removal of rows that can never
//! bind over the variable boxes.

use super::model::{MilpModel, Sense, VarKind};
use super::simplex::LpData;

const ACTIVITY_TOL: f64 = 1e-9;

#[derive(Debug)]
pub(crate) struct Infeasible;

#[derive(Clone, Debug)]
pub(crate) struct Presolved {
    pub data: LpData,
    /// Original variable index of each reduced column.
    pub orig_of: Vec<usize>,
    /// Values of the original variables; entries for kept columns are overwritten on expansion.
    pub fixed: Vec<f64>,
    pub binary: Vec<bool>,
}

impl Presolved {
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = self.fixed.clone();
        for (k, &j) in self.orig_of.iter().enumerate() {
            out[j] = reduced[k];
        }
        out
    }
}

pub(crate) fn presolve(m: &MilpModel) -> Result<Presolved, Infeasible> {
    let vars = m.vars();
    let mut col_of = vec![usize::MAX; vars.len()];
    let mut orig_of = Vec::new();
    let mut fixed = vec![0.0; vars.len()];
    let mut col_lo = Vec::new();
    let mut col_hi = Vec::new();
    let mut binary = Vec::new();
    for (j, v) in vars.iter().enumerate() {
        if v.lo == v.hi {
            fixed[j] = v.lo;
        } else {
            col_of[j] = orig_of.len();
            orig_of.push(j);
            col_lo.push(v.lo);
            col_hi.push(v.hi);
            binary.push(v.kind == VarKind::Binary);
        }
    }
    let mut cost = vec![0.0; orig_of.len()];
    for (v, &c) in m.objective() {
        if col_of[v.0] != usize::MAX {
            cost[col_of[v.0]] = c;
        }
    }
    let mut rows = Vec::new();
    let mut row_lo = Vec::new();
    let mut row_hi = Vec::new();
    for c in m.constraints() {
        let mut shift = 0.0;
        let mut row = Vec::with_capacity(c.coeffs.len());
        let (mut amin, mut amax) = (0.0, 0.0);
        for &(v, a) in &c.coeffs {
            let k = col_of[v.0];
            if k == usize::MAX {
                shift += a * fixed[v.0];
            } else {
                row.push((k, a));
                let (l, h) = (col_lo[k], col_hi[k]);
                if a > 0.0 {
                    amin += a * l;
                    amax += a * h;
                } else {
                    amin += a * h;
                    amax += a * l;
                }
            }
        }
        let rhs = c.rhs - shift;
        let (lo, hi) = match c.sense {
            Sense::Le => (f64::NEG_INFINITY, rhs),
            Sense::Ge => (rhs, f64::INFINITY),
            Sense::Eq => (rhs, rhs),
        };
        let tol = ACTIVITY_TOL * (1.0 + rhs.abs());
        if amin > hi + tol || amax < lo - tol {
            return Err(Infeasible);
        }
        let redundant = amin >= lo - tol && amax <= hi + tol;
        if row.is_empty() || redundant {
            continue;
        }
        rows.push(row);
        row_lo.push(lo);
        row_hi.push(hi);
    }
    Ok(Presolved {
        data: LpData { n: orig_of.len(), rows, row_lo, row_hi, col_lo, col_hi, cost },
        orig_of,
        fixed,
        binary,
    })
}
