//! Dense-tableau bounded-variable simplex.
//!
//! Rows are stored as `r_i = a_i . x` with the row activity `r_i` treated as
//! an extra column bounded by the row's range. The tableau therefore holds
//! `B^-1 [-A | I]`, every basic variable satisfies
//! `x_B[i] = -sum_{j nonbasic} T[i][j] x_j`, and nonbasic variables sit at a
//! finite bound (or at 0 when free).
//!
//! Primal phase 1 minimises the sum of bound violations of the basic
//! variables; phase 2 is the textbook primal method; the dual method is used
//! whenever the basis is dual feasible, which is the case after a branching
//! bound change. Entering/leaving choices use the largest-violation rule and
//! fall back to Bland's smallest-index rule after a run of degenerate pivots.

pub(crate) const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const DEGENERATE_RUN: usize = 30;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub(crate) struct LpData {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    pub cost: Vec<f64>,
}

impl LpData {
    pub fn m(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

const NONBASIC: usize = usize::MAX;

#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    nc: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    pub x: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    bland: bool,
    degenerate_run: usize,
    pub pivots: usize,
}

/// Basis and nonbasic positions, enough to rebuild a tableau without storing it.
#[derive(Clone, Debug)]
pub(crate) struct BasisSnapshot {
    basis: Vec<usize>,
    x: Vec<f64>,
}

enum Phase1 {
    Feasible,
    Infeasible,
    Limit,
}

impl Tableau {
    /// Slack basis with structural columns at their cost-favourable finite bound.
    pub fn cold(data: &LpData) -> Self {
        let m = data.m();
        let n = data.n;
        let nc = n + m;
        let mut t = vec![0.0; m * nc];
        for (i, row) in data.rows.iter().enumerate() {
            for &(j, a) in row {
                t[i * nc + j] = -a;
            }
            t[i * nc + n + i] = 1.0;
        }
        let mut lo = data.col_lo.clone();
        lo.extend_from_slice(&data.row_lo);
        let mut hi = data.col_hi.clone();
        hi.extend_from_slice(&data.row_hi);
        let mut cost = data.cost.clone();
        cost.resize(nc, 0.0);
        let mut x = vec![0.0; nc];
        for j in 0..n {
            x[j] = favourable_bound(lo[j], hi[j], cost[j]);
        }
        let mut tab = Self {
            m,
            n,
            nc,
            t,
            basis: (n..nc).collect(),
            row_of: (0..nc).map(|j| if j >= n { j - n } else { NONBASIC }).collect(),
            x,
            lo,
            hi,
            d: cost.clone(),
            cost,
            bland: false,
            degenerate_run: 0,
            pivots: 0,
        };
        tab.recompute_basics();
        tab
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot { basis: self.basis.clone(), x: self.x.clone() }
    }

    /// Rebuild a tableau for `data` from a stored basis, then apply `lo`/`hi`.
    pub fn from_snapshot(data: &LpData, snap: &BasisSnapshot) -> Self {
        let mut tab = Self::cold(data);
        tab.x.copy_from_slice(&snap.x);
        tab.install_basis(&snap.basis);
        tab
    }

    pub fn bytes(&self) -> usize {
        self.t.len() * std::mem::size_of::<f64>()
    }

    pub fn structural_values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    fn is_basic(&self, j: usize) -> bool {
        self.row_of[j] != NONBASIC
    }

    /// Change the box of a column; a nonbasic column is moved onto the new box.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        if !self.is_basic(j) {
            let target = if self.x[j] < lo {
                lo
            } else if self.x[j] > hi {
                hi
            } else if self.x[j] == lo || self.x[j] == hi {
                self.x[j]
            } else {
                favourable_bound(lo, hi, self.d[j])
            };
            self.move_nonbasic(j, target);
        }
    }

    fn move_nonbasic(&mut self, j: usize, value: f64) {
        let delta = value - self.x[j];
        if delta == 0.0 {
            return;
        }
        for i in 0..self.m {
            let a = self.t[i * self.nc + j];
            if a != 0.0 {
                self.x[self.basis[i]] -= a * delta;
            }
        }
        self.x[j] = value;
    }

    fn recompute_basics(&mut self) {
        for i in 0..self.m {
            let row = &self.t[i * self.nc..(i + 1) * self.nc];
            let mut s = 0.0;
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 && self.row_of[j] == NONBASIC {
                    s -= a * self.x[j];
                }
            }
            self.x[self.basis[i]] = s;
        }
    }

    fn recompute_duals(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.nc..(i + 1) * self.nc];
            for (dj, &a) in self.d.iter_mut().zip(row) {
                if a != 0.0 {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Rebuild `B^-1 [-A | I]` from scratch for the requested basis.
    fn install_basis(&mut self, wanted: &[usize]) {
        let (m, n, nc) = (self.m, self.n, self.nc);
        // the cold tableau holds the slack basis; pivot the structural columns in
        let mut keep = vec![false; nc];
        for &j in wanted {
            keep[j] = true;
        }
        for &q in wanted.iter().filter(|&&j| j < n) {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..m {
                let b = self.basis[i];
                if b < n || keep[b] {
                    continue;
                }
                let a = self.t[i * nc + q].abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, v)| a > v) {
                    best = Some((i, a));
                }
            }
            if let Some((r, _)) = best {
                let leaving = self.basis[r];
                self.pivot(r, q);
                // leaving slack becomes nonbasic: park it on a bound
                let (l, h) = (self.lo[leaving], self.hi[leaving]);
                self.x[leaving] = clamp_to_bound(self.x[leaving], l, h);
            } else {
                let (l, h) = (self.lo[q], self.hi[q]);
                self.x[q] = clamp_to_bound(self.x[q], l, h);
            }
        }
        for j in 0..nc {
            if !self.is_basic(j) {
                let (l, h) = (self.lo[j], self.hi[j]);
                if !(self.x[j] == l || self.x[j] == h || (l == f64::NEG_INFINITY && h == f64::INFINITY && self.x[j] == 0.0)) {
                    self.x[j] = clamp_to_bound(self.x[j], l, h);
                }
            }
        }
        self.recompute_basics();
        self.recompute_duals();
        self.pivots = 0;
    }

    /// Rebuild from the original data while keeping the current basis.
    pub fn refactor(&mut self, data: &LpData) {
        let snap = self.snapshot();
        let (lo, hi) = (self.lo.clone(), self.hi.clone());
        let mut fresh = Self::cold(data);
        fresh.lo = lo;
        fresh.hi = hi;
        fresh.x.copy_from_slice(&snap.x);
        fresh.install_basis(&snap.basis);
        *self = fresh;
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.nc;
        let piv = self.t[r * nc + q];
        let inv = 1.0 / piv;
        let mut nz: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        nz.push((k, *v));
                    }
                }
            }
            row[q] = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let base = i * nc;
            let f = self.t[base + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[base..base + nc];
            for &(k, v) in &nz {
                let nv = row[k] - f * v;
                row[k] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &(k, v) in &nz {
                self.d[k] -= f * v;
            }
        }
        self.d[q] = 0.0;
        let leaving = self.basis[r];
        self.row_of[leaving] = NONBASIC;
        self.row_of[q] = r;
        self.basis[r] = q;
        self.pivots += 1;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lo[j] - FEAS_TOL {
            x - self.lo[j]
        } else if x > self.hi[j] + FEAS_TOL {
            x - self.hi[j]
        } else {
            0.0
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basis.iter().all(|&j| self.infeasibility(j) == 0.0)
    }

    fn at_lower(&self, j: usize) -> bool {
        self.x[j] <= self.lo[j]
    }

    fn at_upper(&self, j: usize) -> bool {
        self.x[j] >= self.hi[j]
    }

    fn dual_feasible(&self) -> bool {
        (0..self.nc).all(|j| {
            if self.is_basic(j) || self.lo[j] == self.hi[j] {
                return true;
            }
            let dj = self.d[j];
            let lower = self.at_lower(j);
            let upper = self.at_upper(j);
            match (lower, upper) {
                (true, false) => dj >= -OPT_TOL,
                (false, true) => dj <= OPT_TOL,
                (false, false) => dj.abs() <= OPT_TOL,
                (true, true) => true,
            }
        })
    }

    fn note_step(&mut self, theta: f64) {
        if theta.abs() <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_RUN {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    /// Entering candidate for reduced costs `dvec`: `(column, direction)`.
    #[allow(clippy::needless_range_loop)]
    fn choose_entering(&self, dvec: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.nc {
            if self.is_basic(j) || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = dvec[j];
            let can_up = !self.at_upper(j);
            let can_down = !self.at_lower(j);
            let cand = if can_up && dj < -OPT_TOL {
                Some((1.0, -dj))
            } else if can_down && dj > OPT_TOL {
                Some((-1.0, dj))
            } else {
                None
            };
            if let Some((dir, score)) = cand {
                if self.bland {
                    return Some((j, dir));
                }
                if best.is_none_or(|(_, _, s)| score > s) {
                    best = Some((j, dir, score));
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Apply a primal step of length `theta` along column `q` in direction `dir`.
    fn shift_along(&mut self, q: usize, dir: f64, theta: f64) {
        if theta == 0.0 {
            return;
        }
        let nc = self.nc;
        for i in 0..self.m {
            let a = self.t[i * nc + q];
            if a != 0.0 {
                self.x[self.basis[i]] -= a * dir * theta;
            }
        }
        self.x[q] += dir * theta;
    }

    fn primal(&mut self, limit: usize) -> LpStatus {
        let nc = self.nc;
        let mut iters = 0;
        loop {
            iters += 1;
            if iters > limit {
                return LpStatus::IterationLimit;
            }
            let d = std::mem::take(&mut self.d);
            let entering = self.choose_entering(&d);
            self.d = d;
            let Some((q, dir)) = entering else {
                return LpStatus::Optimal;
            };
            // Harris two-pass ratio test
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                let a = self.t[i * nc + q];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = -a * dir;
                let b = self.basis[i];
                let dist = if rate < 0.0 { self.x[b] - self.lo[b] } else { self.hi[b] - self.x[b] };
                if dist.is_finite() {
                    theta_max = theta_max.min((dist.max(0.0) + FEAS_TOL) / rate.abs());
                }
            }
            let mut leave: Option<(usize, f64, f64)> = None;
            if theta_max.is_finite() {
                for i in 0..self.m {
                    let a = self.t[i * nc + q];
                    if a.abs() < PIVOT_TOL {
                        continue;
                    }
                    let rate = -a * dir;
                    let b = self.basis[i];
                    let dist = if rate < 0.0 { self.x[b] - self.lo[b] } else { self.hi[b] - self.x[b] };
                    if !dist.is_finite() {
                        continue;
                    }
                    let ratio = dist.max(0.0) / rate.abs();
                    if ratio <= theta_max {
                        let better = match leave {
                            None => true,
                            Some((li, la, _)) => {
                                if self.bland {
                                    self.basis[i] < self.basis[li]
                                } else {
                                    a.abs() > la
                                }
                            }
                        };
                        if better {
                            leave = Some((i, a.abs(), ratio));
                        }
                    }
                }
            }
            let span = self.hi[q] - self.lo[q];
            match leave {
                Some((_, _, ratio)) if ratio < span => {
                    let (r, _, theta) = leave.unwrap();
                    let b = self.basis[r];
                    let rate = -self.t[r * nc + q] * dir;
                    let target = if rate < 0.0 { self.lo[b] } else { self.hi[b] };
                    self.shift_along(q, dir, theta);
                    self.x[b] = target;
                    self.note_step(theta);
                    self.pivot(r, q);
                }
                _ if span.is_finite() => {
                    // bound flip
                    let target = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                    self.shift_along(q, dir, span);
                    self.x[q] = target;
                    self.note_step(span);
                }
                _ => return LpStatus::Unbounded,
            }
        }
    }

    /// Composite phase 1: drive basic bound violations to zero.
    fn phase1(&mut self, limit: usize) -> Phase1 {
        let nc = self.nc;
        let mut w = vec![0.0; nc];
        let mut iters = 0;
        loop {
            iters += 1;
            if iters > limit {
                return Phase1::Limit;
            }
            w.iter_mut().for_each(|v| *v = 0.0);
            let mut any = false;
            for i in 0..self.m {
                let b = self.basis[i];
                let inf = self.infeasibility(b);
                if inf == 0.0 {
                    continue;
                }
                any = true;
                let s = if inf < 0.0 { -1.0 } else { 1.0 };
                for (wj, &a) in w.iter_mut().zip(&self.t[i * nc..(i + 1) * nc]) {
                    if a != 0.0 {
                        *wj -= s * a;
                    }
                }
            }
            if !any {
                return Phase1::Feasible;
            }
            for &b in &self.basis {
                w[b] = 0.0;
            }
            let Some((q, dir)) = self.choose_entering(&w) else {
                return Phase1::Infeasible;
            };
            // first breakpoint
            let mut leave: Option<(usize, f64, f64, f64)> = None; // row, |a|, ratio, target
            for i in 0..self.m {
                let a = self.t[i * nc + q];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = -a * dir;
                let b = self.basis[i];
                let x = self.x[b];
                let inf = self.infeasibility(b);
                let (dist, target) = if inf < 0.0 {
                    if rate > 0.0 { (self.lo[b] - x, self.lo[b]) } else { continue }
                } else if inf > 0.0 {
                    if rate < 0.0 { (x - self.hi[b], self.hi[b]) } else { continue }
                } else if rate < 0.0 {
                    ((x - self.lo[b]).max(0.0), self.lo[b])
                } else {
                    ((self.hi[b] - x).max(0.0), self.hi[b])
                };
                if !dist.is_finite() {
                    continue;
                }
                let ratio = dist / rate.abs();
                let better = match leave {
                    None => true,
                    Some((li, la, lr, _)) => {
                        if ratio < lr - 1e-12 {
                            true
                        } else if ratio <= lr + 1e-12 {
                            if self.bland { self.basis[i] < self.basis[li] } else { a.abs() > la }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, a.abs(), ratio, target));
                }
            }
            let span = self.hi[q] - self.lo[q];
            match leave {
                Some((r, _, theta, target)) if theta < span => {
                    let b = self.basis[r];
                    self.shift_along(q, dir, theta);
                    self.x[b] = target;
                    self.note_step(theta);
                    self.pivot(r, q);
                }
                _ if span.is_finite() => {
                    let target = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                    self.shift_along(q, dir, span);
                    self.x[q] = target;
                    self.note_step(span);
                }
                // an unbounded direction reducing infeasibility: move until the
                // first violated variable reaches its bound; with no such row the
                // phase 1 objective is unbounded below, which cannot happen
                _ => return Phase1::Infeasible,
            }
        }
    }

    fn dual(&mut self, limit: usize) -> LpStatus {
        let nc = self.nc;
        let mut iters = 0;
        loop {
            iters += 1;
            if iters > limit {
                return LpStatus::IterationLimit;
            }
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let inf = self.infeasibility(self.basis[i]);
                if inf == 0.0 {
                    continue;
                }
                let better = match pick {
                    None => true,
                    Some((pi, pv)) => {
                        if self.bland {
                            self.basis[i] < self.basis[pi]
                        } else {
                            inf.abs() > pv.abs()
                        }
                    }
                };
                if better {
                    pick = Some((i, inf));
                }
            }
            let Some((r, inf)) = pick else {
                return LpStatus::Optimal;
            };
            let b = self.basis[r];
            let increase = inf < 0.0;
            let target = if increase { self.lo[b] } else { self.hi[b] };
            let row = r * nc;
            // Harris two-pass ratio test over eligible nonbasic columns
            let eligible = |j: usize, a: f64| -> Option<f64> {
                if self.row_of[j] != NONBASIC || self.lo[j] == self.hi[j] || a.abs() < PIVOT_TOL {
                    return None;
                }
                let can_up = !self.at_upper(j);
                let can_down = !self.at_lower(j);
                // x_b moves by -a * dx_j
                let up_ok = can_up && ((increase && a < 0.0) || (!increase && a > 0.0));
                let down_ok = can_down && ((increase && a > 0.0) || (!increase && a < 0.0));
                if up_ok {
                    Some(self.d[j].max(0.0))
                } else if down_ok {
                    Some((-self.d[j]).max(0.0))
                } else {
                    None
                }
            };
            let mut theta_max = f64::INFINITY;
            for j in 0..nc {
                let a = self.t[row + j];
                if a == 0.0 {
                    continue;
                }
                if let Some(dj) = eligible(j, a) {
                    theta_max = theta_max.min((dj + OPT_TOL) / a.abs());
                }
            }
            if !theta_max.is_finite() {
                return LpStatus::Infeasible;
            }
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..nc {
                let a = self.t[row + j];
                if a == 0.0 {
                    continue;
                }
                if let Some(dj) = eligible(j, a) {
                    if dj / a.abs() <= theta_max {
                        let better = match enter {
                            None => true,
                            Some((ej, ea)) => {
                                if self.bland { j < ej } else { a.abs() > ea }
                            }
                        };
                        if better {
                            enter = Some((j, a.abs()));
                        }
                    }
                }
            }
            let (q, _) = enter.expect("theta_max finite implies a candidate");
            let a = self.t[row + q];
            let delta = (self.x[b] - target) / a;
            self.shift_along(q, 1.0, delta);
            self.x[b] = target;
            self.note_step(self.d[q].abs() / a.abs());
            self.pivot(r, q);
        }
    }

    fn residual(&self, data: &LpData) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in data.rows.iter().enumerate() {
            let act: f64 = row.iter().map(|&(j, a)| a * self.x[j]).sum();
            let r = (act - self.x[self.n + i]).abs() / (1.0 + act.abs());
            worst = worst.max(r);
        }
        worst
    }

    fn run(&mut self, limit: usize) -> LpStatus {
        let mut rounds = 0;
        loop {
            rounds += 1;
            if rounds > 8 {
                return LpStatus::IterationLimit;
            }
            if !self.primal_feasible() {
                if self.dual_feasible() {
                    match self.dual(limit) {
                        LpStatus::Optimal => {}
                        other => return other,
                    }
                } else {
                    match self.phase1(limit) {
                        Phase1::Feasible => {}
                        Phase1::Infeasible => return LpStatus::Infeasible,
                        Phase1::Limit => return LpStatus::IterationLimit,
                    }
                }
            }
            match self.primal(limit) {
                LpStatus::Optimal if self.primal_feasible() => return LpStatus::Optimal,
                LpStatus::Optimal => continue,
                other => return other,
            }
        }
    }

    /// Solve from the current basis. Refactors and retries when round-off
    /// has drifted the tableau away from the original rows.
    pub fn solve(&mut self, data: &LpData) -> LpStatus {
        let limit = 50 * (self.m + self.nc) + 1000;
        let mut status = LpStatus::IterationLimit;
        for attempt in 0..3 {
            status = self.run(limit);
            match status {
                LpStatus::Optimal => {
                    if self.residual(data) <= RESIDUAL_TOL {
                        return status;
                    }
                }
                LpStatus::IterationLimit => {}
                // certificates from a drifted tableau are re-derived once
                _ if attempt == 0 && self.pivots > 0 => {}
                _ => return status,
            }
            self.refactor(data);
            self.bland = attempt > 0;
        }
        status
    }
}

fn favourable_bound(lo: f64, hi: f64, c: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if c < 0.0 {
                hi
            } else {
                lo
            }
        }
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

fn clamp_to_bound(x: f64, lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if (x - lo).abs() <= (hi - x).abs() {
                lo
            } else {
                hi
            }
        }
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}
