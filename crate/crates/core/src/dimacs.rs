//! DIMACS CNF reader and writer.

use std::fmt::Write as _;

use crate::cnf::{Clause, CnfFormula, Lit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimacsCnf {
    pub num_vars: u32,
    pub formula: CnfFormula,
}

pub fn parse(text: &str) -> Result<DimacsCnf> {
    let mut header: Option<(u32, usize)> = None;
    let mut formula = CnfFormula::new();
    let mut pending: Vec<Lit> = Vec::new();
    let mut pending_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(Error::parse(line_no, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(Error::parse(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let vars = parts[2]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad variable count"))?;
            let clauses = parts[3]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad clause count"))?;
            header = Some((vars, clauses));
            continue;
        }
        let (num_vars, _) = header.ok_or_else(|| Error::parse(line_no, "clause before header"))?;
        for tok in line.split_whitespace() {
            let value: i64 = tok
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad literal `{tok}`")))?;
            if value == 0 {
                let clause = Clause::new(pending.drain(..))
                    .map_err(|e| Error::parse(pending_line.max(line_no), e.to_string()))?;
                formula.push(clause);
                continue;
            }
            if value.unsigned_abs() > num_vars as u64 {
                return Err(Error::parse(line_no, format!("literal {value} exceeds declared variables")));
            }
            if pending.is_empty() {
                pending_line = line_no;
            }
            pending.push(Lit::from_dimacs(value).expect("nonzero"));
        }
    }
    let (num_vars, num_clauses) = header.ok_or_else(|| Error::parse(0, "missing header"))?;
    if !pending.is_empty() {
        return Err(Error::parse(pending_line, "unterminated clause"));
    }
    if formula.len() != num_clauses {
        return Err(Error::parse(
            0,
            format!("header declares {num_clauses} clauses, found {}", formula.len()),
        ));
    }
    Ok(DimacsCnf { num_vars, formula })
}

/// Writes `formula` with a header covering at least `num_vars` variables.
pub fn write(formula: &CnfFormula, num_vars: u32) -> String {
    let vars = num_vars.max(formula.max_var_id());
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", vars, formula.len());
    for c in formula.clauses() {
        for l in c.lits() {
            let _ = write!(out, "{} ", l.to_dimacs());
        }
        out.push_str("0\n");
    }
    out
}
