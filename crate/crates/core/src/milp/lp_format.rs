//! CPLEX LP text format, one term per line, names preserved.

use std::fmt::Write;

use super::model::{MilpModel, Sense, VarKind};

fn clean(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]{}()!\"#$%&/,;?@'`~".contains(c) { c } else { '_' })
        .collect()
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

pub fn write_lp(m: &MilpModel) -> String {
    let name = |k: usize| clean(&m.vars()[k].name);
    let mut s = String::new();
    s.push_str("Minimize\n obj:");
    if m.objective().is_empty() {
        s.push_str(" 0");
    }
    s.push('\n');
    for (v, c) in m.objective() {
        let _ = writeln!(s, "   {} {}", signed(*c), name(v.0));
    }
    if m.objective_constant() != 0.0 {
        let _ = writeln!(s, "   {} obj_constant", signed(m.objective_constant()));
    }
    s.push_str("Subject To\n");
    for (i, c) in m.constraints().iter().enumerate() {
        let _ = writeln!(s, " c{}_{}:", i, clean(&c.name));
        if c.coeffs.is_empty() {
            s.push_str("   0 obj_constant\n");
        }
        for &(v, a) in &c.coeffs {
            let _ = writeln!(s, "   {} {}", signed(a), name(v.0));
        }
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(s, "   {} {}", op, num(c.rhs));
    }
    s.push_str("Bounds\n");
    for (k, v) in m.vars().iter().enumerate() {
        let _ = writeln!(s, " {} <= {} <= {}", num(v.lo), name(k), num(v.hi));
    }
    if m.objective_constant() != 0.0 || m.constraints().iter().any(|c| c.coeffs.is_empty()) {
        let _ = writeln!(s, " obj_constant = 1");
    }
    let bins: Vec<_> = (0..m.num_vars()).filter(|&k| m.vars()[k].kind == VarKind::Binary).collect();
    if !bins.is_empty() {
        s.push_str("Binaries\n");
        for k in bins {
            let _ = writeln!(s, " {}", name(k));
        }
    }
    s.push_str("End\n");
    s
}

fn signed(x: f64) -> String {
    if x < 0.0 {
        format!("- {:?}", -x)
    } else {
        format!("+ {x:?}")
    }
}
