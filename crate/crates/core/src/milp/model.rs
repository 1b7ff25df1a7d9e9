use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MilpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Minimisation MILP over continuous and binary variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    vars: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: BTreeMap<VarId, f64>,
    obj_constant: f64,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.0]
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &BTreeMap<VarId, f64> {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.obj_constant
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> Result<VarId, MilpError> {
        let name = name.into();
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(MilpError::BadBounds { name, lo, hi });
        }
        self.vars.push(Variable { name, kind: VarKind::Continuous, lo, hi });
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.vars.push(Variable { name: name.into(), kind: VarKind::Binary, lo: 0.0, hi: 1.0 });
        VarId(self.vars.len() - 1)
    }

    /// Tighten or fix a variable's box. Binary boxes must stay within `{0, 1}` endpoints.
    pub fn set_bounds(&mut self, v: VarId, lo: f64, hi: f64) -> Result<(), MilpError> {
        let var = self.vars.get_mut(v.0).ok_or(MilpError::UnknownVar(v))?;
        let bad = lo.is_nan() || hi.is_nan() || lo > hi;
        let bad_bin = var.kind == VarKind::Binary
            && !((lo == 0.0 || lo == 1.0) && (hi == 0.0 || hi == 1.0));
        if bad || bad_bin {
            return Err(MilpError::BadBounds { name: var.name.clone(), lo, hi });
        }
        var.lo = lo;
        var.hi = hi;
        Ok(())
    }

    pub fn fix(&mut self, v: VarId, value: f64) -> Result<(), MilpError> {
        self.set_bounds(v, value, value)
    }

    fn check_expr(&self, coeffs: &[(VarId, f64)]) -> Result<Vec<(VarId, f64)>, MilpError> {
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(v, a) in coeffs {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVar(v));
            }
            if !a.is_finite() {
                return Err(MilpError::NonFinite(format!("coefficient of {}", self.vars[v.0].name)));
            }
            *merged.entry(v).or_insert(0.0) += a;
        }
        Ok(merged.into_iter().filter(|&(_, a)| a != 0.0).collect())
    }

    /// Adds `sum coeffs <sense> rhs`; duplicate variables are merged. Returns the row index.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: &[(VarId, f64)],
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, MilpError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(MilpError::NonFinite(format!("rhs of {name}")));
        }
        let coeffs = self.check_expr(coeffs)?;
        self.constraints.push(Constraint { name, coeffs, sense, rhs });
        Ok(self.constraints.len() - 1)
    }

    pub fn set_objective_coeff(&mut self, v: VarId, c: f64) -> Result<(), MilpError> {
        if v.0 >= self.vars.len() {
            return Err(MilpError::UnknownVar(v));
        }
        if !c.is_finite() {
            return Err(MilpError::NonFinite(format!("objective coefficient of {}", self.vars[v.0].name)));
        }
        if c == 0.0 {
            self.objective.remove(&v);
        } else {
            self.objective.insert(v, c);
        }
        Ok(())
    }

    pub fn add_objective_coeff(&mut self, v: VarId, c: f64) -> Result<(), MilpError> {
        let cur = self.objective.get(&v).copied().unwrap_or(0.0);
        self.set_objective_coeff(v, cur + c)
    }

    pub fn set_objective_constant(&mut self, c: f64) {
        self.obj_constant = c;
    }

    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        self.obj_constant + self.objective.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let boxes = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lo - x).max(x - v.hi).max(0.0))
            .fold(0.0, f64::max);
        rows.max(boxes)
    }

    pub fn is_integral(&self, values: &[f64], tol: f64) -> bool {
        self.vars
            .iter()
            .zip(values)
            .all(|(v, &x)| v.kind == VarKind::Continuous || (x - x.round()).abs() <= tol)
    }

    /// Same model with every binary turned into a continuous variable over its box.
    pub fn relaxed(&self) -> MilpModel {
        let mut m = self.clone();
        for v in &mut m.vars {
            v.kind = VarKind::Continuous;
        }
        m
    }

    /// Smallest `M >= 0` with `expr - rhs <= M` over the variable boxes, if finite.
    pub fn tight_big_m(&self, expr: &[(VarId, f64)], rhs: f64) -> Option<f64> {
        let mut sup = -rhs;
        for &(v, a) in expr {
            let var = self.vars.get(v.0)?;
            sup += if a >= 0.0 { a * var.hi } else { a * var.lo };
        }
        sup.is_finite().then_some(sup.max(0.0))
    }

    /// Adds `expr <= rhs` enforced only when binary `b` is 1, as
    /// `expr + M b <= rhs + M`. `big_m` must cover `sup(expr) - rhs` over the boxes.
    pub fn add_indicator_leq(
        &mut self,
        name: impl Into<String>,
        b: VarId,
        expr: &[(VarId, f64)],
        rhs: f64,
        big_m: f64,
    ) -> Result<usize, MilpError> {
        let name = name.into();
        match self.vars.get(b.0) {
            None => return Err(MilpError::UnknownVar(b)),
            Some(v) if v.kind != VarKind::Binary => return Err(MilpError::NotBinary(v.name.clone())),
            _ => {}
        }
        if !(big_m.is_finite() && big_m > 0.0) {
            return Err(MilpError::BadBigM { name, big_m, required: None });
        }
        if let Some(req) = self.tight_big_m(expr, rhs) {
            if big_m < req - 1e-9 * (1.0 + req.abs()) {
                return Err(MilpError::BadBigM { name, big_m, required: Some(req) });
            }
        }
        let mut coeffs = expr.to_vec();
        coeffs.push((b, big_m));
        self.add_constraint(name, &coeffs, Sense::Le, rhs + big_m)
    }

    /// Epigraph of a convex piecewise-linear function given by its supporting
    /// lines: `out >= slope * input + intercept` for every `(slope, intercept)`.
    pub fn add_pwl_convex_min(
        &mut self,
        name: &str,
        out: VarId,
        input: VarId,
        tangents: &[(f64, f64)],
    ) -> Result<(), MilpError> {
        if tangents.is_empty() {
            return Err(MilpError::EmptyTangents(name.to_string()));
        }
        for (k, &(slope, intercept)) in tangents.iter().enumerate() {
            self.add_constraint(format!("{name}_t{k}"), &[(out, 1.0), (input, -slope)], Sense::Ge, intercept)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_coefficients_merge() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        let y = m.add_continuous("y", 0.0, 1.0).unwrap();
        m.add_constraint("c", &[(x, 1.0), (y, 2.0), (x, 3.0), (y, -2.0)], Sense::Le, 1.0).unwrap();
        assert_eq!(m.constraints()[0].coeffs, vec![(x, 4.0)]);
    }

    #[test]
    fn rejects_unknown_and_nonfinite() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        assert_eq!(
            m.add_constraint("c", &[(VarId(7), 1.0)], Sense::Le, 1.0),
            Err(MilpError::UnknownVar(VarId(7)))
        );
        assert!(matches!(m.add_constraint("c", &[(x, f64::NAN)], Sense::Le, 1.0), Err(MilpError::NonFinite(_))));
        assert!(m.add_continuous("bad", 2.0, 1.0).is_err());
    }

    #[test]
    fn binary_bounds_must_be_integral() {
        let mut m = MilpModel::new();
        let b = m.add_binary("b");
        assert!(m.set_bounds(b, 0.5, 1.0).is_err());
        assert!(m.fix(b, 1.0).is_ok());
        assert_eq!(m.var(b).lo, 1.0);
    }

    #[test]
    fn indicator_rejects_continuous_and_bad_m() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        let b = m.add_binary("b");
        assert_eq!(m.add_indicator_leq("i", x, &[(x, 1.0)], 3.0, 10.0), Err(MilpError::NotBinary("x".into())));
        assert!(matches!(m.add_indicator_leq("i", b, &[(x, 1.0)], 3.0, 0.0), Err(MilpError::BadBigM { .. })));
        // sup(x) - 3 = 7 > 5
        assert!(matches!(
            m.add_indicator_leq("i", b, &[(x, 1.0)], 3.0, 5.0),
            Err(MilpError::BadBigM { required: Some(r), .. }) if (r - 7.0).abs() < 1e-12
        ));
        let row = m.add_indicator_leq("i", b, &[(x, 1.0)], 3.0, 7.0).unwrap();
        let c = &m.constraints()[row];
        assert_eq!(c.coeffs, vec![(x, 1.0), (b, 7.0)]);
        assert_eq!(c.rhs, 10.0);
    }

    #[test]
    fn indicator_semantics() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", 0.0, 10.0).unwrap();
        let b = m.add_binary("b");
        let row = m.add_indicator_leq("i", b, &[(x, 1.0)], 3.0, 7.0).unwrap();
        let c = &m.constraints()[row];
        // b = 1 forces x <= 3
        assert_eq!(c.violation(&[3.0, 1.0]), 0.0);
        assert!(c.violation(&[3.5, 1.0]) > 0.0);
        // b = 0 is vacuous even at the top of the box
        assert_eq!(c.violation(&[10.0, 0.0]), 0.0);
    }

    #[test]
    fn empty_tangents_rejected() {
        let mut m = MilpModel::new();
        let q = m.add_continuous("q", -1.0, 1.0).unwrap();
        let o = m.add_continuous("o", -10.0, 10.0).unwrap();
        assert_eq!(m.add_pwl_convex_min("f", o, q, &[]), Err(MilpError::EmptyTangents("f".into())));
    }
}
