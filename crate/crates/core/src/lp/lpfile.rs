//! Debug export in CPLEX LP text format.
//!
//! One constraint per line with its tag as the row name. Tags and variable
//! names are sanitized to the LP-format character set; sanitized names that
//! collide get a numeric suffix.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{LinExpr, ModelIR, Relop, Sense, VarKind};

fn sanitize(raw: &str, taken: &mut HashSet<String>) -> String {
    let mut name: String = raw
        .chars()
        .map(|ch| {
            if ch.is_ascii_alphanumeric() || "!\"#$%&()/,.;?@_`'{}|~".contains(ch) {
                ch
            } else {
                '_'
            }
        })
        .collect();
    if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        name.insert(0, '_');
    }
    let base = name.clone();
    let mut k = 1;
    while !taken.insert(name.clone()) {
        name = format!("{base}~{k}");
        k += 1;
    }
    name
}

fn write_expr(out: &mut String, expr: &LinExpr, names: &[String]) {
    let mut first = true;
    for (v, c) in expr.terms() {
        let sign = if c < 0.0 { "-" } else { "+" };
        if first && c >= 0.0 {
            let _ = write!(out, " {} {}", c, names[v.index()]);
        } else {
            let _ = write!(out, " {sign} {} {}", c.abs(), names[v.index()]);
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Renders `model` as LP-format text.
pub fn to_lp_string(model: &ModelIR) -> String {
    let mut taken = HashSet::new();
    let names: Vec<String> = model.vars().iter().map(|v| sanitize(&v.name, &mut taken)).collect();
    let mut out = String::new();
    out.push_str("\\ exported model\n");
    match model.objective() {
        Some(obj) => {
            out.push_str(match obj.sense {
                Sense::Minimize => "Minimize\n",
                Sense::Maximize => "Maximize\n",
            });
            if obj.expr.constant_part() != 0.0 {
                let _ = writeln!(out, "\\ objective constant {}", obj.expr.constant_part());
            }
            out.push_str(" obj:");
            write_expr(&mut out, &obj.expr, &names);
            out.push('\n');
        }
        None => out.push_str("Minimize\n obj: 0\n"),
    }
    out.push_str("Subject To\n");
    for c in model.constraints() {
        let tag = sanitize(&c.tag, &mut taken);
        let _ = write!(out, " {tag}:");
        write_expr(&mut out, &c.expr, &names);
        let op = match c.relop {
            Relop::Le => "<=",
            Relop::Eq => "=",
            Relop::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs - c.expr.constant_part());
    }
    out.push_str("Bounds\n");
    for (v, name) in model.vars().iter().zip(&names) {
        if v.kind == VarKind::Binary {
            continue;
        }
        if v.lo == f64::NEG_INFINITY && v.hi == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if v.lo == v.hi {
            let _ = writeln!(out, " {name} = {}", v.lo);
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", fmt_bound(v.lo), fmt_bound(v.hi));
        }
    }
    let binaries: Vec<&str> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    if !model.sos1_groups().is_empty() {
        out.push_str("SOS\n");
        for g in model.sos1_groups() {
            let tag = sanitize(&g.tag, &mut taken);
            let _ = write!(out, " {tag}: S1::");
            for (k, m) in g.members.iter().enumerate() {
                let _ = write!(out, " {}:{}", names[m.index()], k + 1);
            }
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}
