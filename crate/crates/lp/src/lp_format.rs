//! Plain-text CPLEX LP export, for cross-checking a model with an external
//! solver.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::{LinearProgram, Sense};

fn sanitize(name: &str, fallback: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    match cleaned.chars().next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => cleaned,
        _ => format!("v{fallback}_{cleaned}"),
    }
}

fn term(out: &mut String, first: bool, coefficient: f64, name: &str) {
    if first {
        if coefficient < 0.0 {
            let _ = write!(out, " - {} {}", -coefficient, name);
        } else {
            let _ = write!(out, " {coefficient} {name}");
        }
    } else if coefficient < 0.0 {
        let _ = write!(out, " - {} {}", -coefficient, name);
    } else {
        let _ = write!(out, " + {coefficient} {name}");
    }
}

pub fn to_lp_string(lp: &LinearProgram) -> String {
    let names: Vec<String> = lp
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| sanitize(&v.name, i))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", lp.name);
    out.push_str(match lp.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    let mut first = true;
    for (i, &c) in lp.objective().iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &names[i]);
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    if lp.objective_offset() != 0.0 {
        let _ = write!(out, " + {} constant", lp.objective_offset());
    }
    out.push_str("\nSubject To\n");
    for (r, c) in lp.constraints().iter().enumerate() {
        let _ = write!(out, " {}:", sanitize(&c.name, r));
        let mut first = true;
        for &(v, a) in &c.terms {
            term(&mut out, first, a, &names[v.index()]);
            first = false;
        }
        if first {
            let _ = write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("x"));
        }
        let _ = writeln!(out, " {} {}", c.relation.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    if lp.objective_offset() != 0.0 {
        out.push_str(" constant = 1\n");
    }
    for (i, v) in lp.variables().iter().enumerate() {
        if v.binary {
            continue;
        }
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {} = {}", names[i], v.lower);
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, names[i], v.upper);
            }
            (true, false) if v.lower == 0.0 => {}
            (true, false) => {
                let _ = writeln!(out, " {} >= {}", names[i], v.lower);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {} <= {}", names[i], v.upper);
            }
            (false, false) => {
                let _ = writeln!(out, " {} free", names[i]);
            }
        }
    }
    let binaries: Vec<&str> = lp.binaries().map(|v| names[v.index()].as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp_file(lp: &LinearProgram, path: impl AsRef<Path>) -> io::Result<()> {
    std::fs::write(path, to_lp_string(lp))
}
