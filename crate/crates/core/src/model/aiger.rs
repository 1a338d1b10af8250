//! ASCII AIGER 1.9 (`aag`) reading and writing.
//!
//! Only safety models with a single property are accepted: either one
//! `B` bad-state literal, or (old style) no bad literals and exactly one
//! output, which is then read as the bad-state output. Justice, fairness and
//! invariant-constraint sections are rejected.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// AIGER literal: `2 * variable + negated`. `0` is false, `1` is true.
pub type AigLit = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatchReset {
    Zero,
    One,
    Uninitialized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AigLatch {
    pub lit: AigLit,
    pub next: AigLit,
    pub reset: LatchReset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AigAnd {
    pub lhs: AigLit,
    pub rhs0: AigLit,
    pub rhs1: AigLit,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Aig {
    pub max_var: u32,
    pub inputs: Vec<AigLit>,
    pub latches: Vec<AigLatch>,
    pub outputs: Vec<AigLit>,
    pub bad: Vec<AigLit>,
    pub ands: Vec<AigAnd>,
    pub comments: Vec<String>,
}

impl Aig {
    /// The single bad-state literal this model checks.
    pub fn property(&self) -> Result<AigLit> {
        match (self.bad.as_slice(), self.outputs.as_slice()) {
            ([b], _) => Ok(*b),
            ([], [o]) => Ok(*o),
            ([], []) => Err(Error::parse(1, "model has no property")),
            _ => Err(Error::parse(1, "multiple properties are unsupported")),
        }
    }

    /// Indices into `ands` in dependency order.
    pub fn and_order(&self) -> Result<Vec<usize>> {
        let by_var: HashMap<u32, usize> = self
            .ands
            .iter()
            .enumerate()
            .map(|(i, a)| (a.lhs >> 1, i))
            .collect();
        let mut state = vec![0u8; self.ands.len()];
        let mut order = Vec::with_capacity(self.ands.len());
        for root in 0..self.ands.len() {
            let mut stack = vec![(root, false)];
            while let Some((i, done)) = stack.pop() {
                if done {
                    state[i] = 2;
                    order.push(i);
                    continue;
                }
                match state[i] {
                    2 => continue,
                    1 => return Err(Error::CyclicCircuit(self.ands[i].lhs >> 1)),
                    _ => {}
                }
                state[i] = 1;
                stack.push((i, true));
                for r in [self.ands[i].rhs0, self.ands[i].rhs1] {
                    if let Some(&d) = by_var.get(&(r >> 1)) {
                        match state[d] {
                            1 => return Err(Error::CyclicCircuit(r >> 1)),
                            0 => stack.push((d, false)),
                            _ => {}
                        }
                    }
                }
            }
        }
        Ok(order)
    }

    /// AIGER variables in the transitive fanin of `lit`.
    pub fn cone(&self, lit: AigLit) -> HashSet<u32> {
        let by_var: HashMap<u32, &AigAnd> = self.ands.iter().map(|a| (a.lhs >> 1, a)).collect();
        let mut seen = HashSet::new();
        let mut stack = vec![lit >> 1];
        while let Some(v) = stack.pop() {
            if v == 0 || !seen.insert(v) {
                continue;
            }
            if let Some(a) = by_var.get(&v) {
                stack.push(a.rhs0 >> 1);
                stack.push(a.rhs1 >> 1);
            }
        }
        seen
    }
}

fn parse_nums(line: &str, line_no: usize, expected: std::ops::RangeInclusive<usize>) -> Result<Vec<u32>> {
    let nums: Vec<u32> = line
        .split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|_| Error::parse(line_no, format!("bad number `{t}`"))))
        .collect::<Result<_>>()?;
    if !expected.contains(&nums.len()) {
        return Err(Error::parse(
            line_no,
            format!("expected {expected:?} numbers, found {}", nums.len()),
        ));
    }
    Ok(nums)
}

pub fn parse_aiger(bytes: &[u8]) -> Result<Aig> {
    if bytes.starts_with(b"aig ") {
        return Err(Error::parse(1, "binary AIGER unsupported"));
    }
    let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(1, "input is not ASCII AIGER"))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&"aag") {
        return Err(Error::parse(1, "missing `aag` header"));
    }
    let h = parse_nums(&fields[1..].join(" "), 1, 5..=9)?;
    let (m, ni, nl, no, na) = (h[0], h[1] as usize, h[2] as usize, h[3] as usize, h[4] as usize);
    let nb = h.get(5).copied().unwrap_or(0) as usize;
    for (idx, name) in [(6, "invariant constraints"), (7, "justice properties"), (8, "fairness constraints")] {
        if h.get(idx).copied().unwrap_or(0) != 0 {
            return Err(Error::parse(1, format!("{name} unsupported")));
        }
    }
    if (m as u64) < (ni + nl + na) as u64 {
        return Err(Error::parse(1, "maximum variable index too small"));
    }

    let mut aig = Aig {
        max_var: m,
        ..Aig::default()
    };
    let mut defined: HashMap<u32, usize> = HashMap::new();
    let mut next_line = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of file while reading {what}")))
    };
    let check_range = |lit: u32, line_no: usize| -> Result<()> {
        if lit >> 1 > m {
            Err(Error::parse(line_no, format!("literal {lit} exceeds maximum variable index")))
        } else {
            Ok(())
        }
    };
    let define = |lit: u32, line_no: usize, defined: &mut HashMap<u32, usize>| -> Result<()> {
        if lit & 1 == 1 || lit < 2 {
            return Err(Error::parse(line_no, format!("invalid definition literal {lit}")));
        }
        if let Some(prev) = defined.insert(lit >> 1, line_no) {
            return Err(Error::parse(line_no, format!("variable {} already defined on line {prev}", lit >> 1)));
        }
        Ok(())
    };

    for _ in 0..ni {
        let (n, l) = next_line("inputs")?;
        let v = parse_nums(l, n, 1..=1)?;
        check_range(v[0], n)?;
        define(v[0], n, &mut defined)?;
        aig.inputs.push(v[0]);
    }
    let mut latch_lines = Vec::with_capacity(nl);
    for _ in 0..nl {
        let (n, l) = next_line("latches")?;
        let v = parse_nums(l, n, 2..=3)?;
        check_range(v[0], n)?;
        check_range(v[1], n)?;
        define(v[0], n, &mut defined)?;
        let reset = match v.get(2).copied() {
            None | Some(0) => LatchReset::Zero,
            Some(1) => LatchReset::One,
            Some(r) if r == v[0] => LatchReset::Uninitialized,
            Some(r) => return Err(Error::parse(n, format!("invalid latch reset {r}"))),
        };
        aig.latches.push(AigLatch {
            lit: v[0],
            next: v[1],
            reset,
        });
        latch_lines.push(n);
    }
    let mut output_lines = Vec::new();
    for _ in 0..no {
        let (n, l) = next_line("outputs")?;
        let v = parse_nums(l, n, 1..=1)?;
        check_range(v[0], n)?;
        aig.outputs.push(v[0]);
        output_lines.push(n);
    }
    for _ in 0..nb {
        let (n, l) = next_line("bad-state properties")?;
        let v = parse_nums(l, n, 1..=1)?;
        check_range(v[0], n)?;
        aig.bad.push(v[0]);
        output_lines.push(n);
    }
    let mut and_lines = Vec::with_capacity(na);
    for _ in 0..na {
        let (n, l) = next_line("AND gates")?;
        let v = parse_nums(l, n, 3..=3)?;
        for &x in &v {
            check_range(x, n)?;
        }
        define(v[0], n, &mut defined)?;
        aig.ands.push(AigAnd {
            lhs: v[0],
            rhs0: v[1],
            rhs1: v[2],
        });
        and_lines.push(n);
    }
    let mut in_comment = false;
    for (_, l) in lines {
        if in_comment {
            aig.comments.push(l.to_string());
        } else if l == "c" {
            in_comment = true;
        }
    }

    let is_defined = |lit: u32| lit < 2 || defined.contains_key(&(lit >> 1));
    for (latch, &n) in aig.latches.iter().zip(&latch_lines) {
        if !is_defined(latch.next) {
            return Err(Error::parse(n, format!("dangling literal {}", latch.next)));
        }
    }
    for (a, &n) in aig.ands.iter().zip(&and_lines) {
        for r in [a.rhs0, a.rhs1] {
            if !is_defined(r) {
                return Err(Error::parse(n, format!("dangling literal {r}")));
            }
        }
    }
    for (&o, &n) in aig.outputs.iter().chain(&aig.bad).zip(&output_lines) {
        if !is_defined(o) {
            return Err(Error::parse(n, format!("dangling literal {o}")));
        }
    }
    aig.property()?;
    aig.and_order()?;
    Ok(aig)
}

pub fn write_aiger(aig: &Aig) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "aag {} {} {} {} {}",
        aig.max_var,
        aig.inputs.len(),
        aig.latches.len(),
        aig.outputs.len(),
        aig.ands.len()
    );
    if !aig.bad.is_empty() {
        let _ = write!(out, " {}", aig.bad.len());
    }
    out.push('\n');
    for i in &aig.inputs {
        let _ = writeln!(out, "{i}");
    }
    for l in &aig.latches {
        match l.reset {
            LatchReset::Zero => {
                let _ = writeln!(out, "{} {}", l.lit, l.next);
            }
            LatchReset::One => {
                let _ = writeln!(out, "{} {} 1", l.lit, l.next);
            }
            LatchReset::Uninitialized => {
                let _ = writeln!(out, "{} {} {}", l.lit, l.next, l.lit);
            }
        }
    }
    for o in aig.outputs.iter().chain(&aig.bad) {
        let _ = writeln!(out, "{o}");
    }
    for a in &aig.ands {
        let _ = writeln!(out, "{} {} {}", a.lhs, a.rhs0, a.rhs1);
    }
    if !aig.comments.is_empty() {
        out.push_str("c\n");
        for c in &aig.comments {
            let _ = writeln!(out, "{c}");
        }
    }
    out
}

/// Incremental AIG construction with constant folding and structural
/// hashing.
#[derive(Debug, Default)]
pub struct AigBuilder {
    aig: Aig,
    strash: HashMap<(AigLit, AigLit), AigLit>,
}

impl AigBuilder {
    pub fn new() -> AigBuilder {
        AigBuilder::default()
    }

    fn fresh(&mut self) -> AigLit {
        self.aig.max_var += 1;
        self.aig.max_var * 2
    }

    pub fn input(&mut self) -> AigLit {
        let l = self.fresh();
        self.aig.inputs.push(l);
        l
    }

    /// Declares a latch; its next-state function is set later.
    pub fn latch(&mut self, reset: LatchReset) -> AigLit {
        let l = self.fresh();
        self.aig.latches.push(AigLatch { lit: l, next: 0, reset });
        l
    }

    pub fn set_next(&mut self, latch: AigLit, next: AigLit) {
        let entry = self
            .aig
            .latches
            .iter_mut()
            .find(|l| l.lit == latch)
            .expect("declared latch");
        entry.next = next;
    }

    pub fn and(&mut self, a: AigLit, b: AigLit) -> AigLit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == 0 || a == (b ^ 1) {
            return 0;
        }
        if a == 1 || a == b {
            return b;
        }
        if let Some(&l) = self.strash.get(&(a, b)) {
            return l;
        }
        let l = self.fresh();
        self.aig.ands.push(AigAnd { lhs: l, rhs0: b, rhs1: a });
        self.strash.insert((a, b), l);
        l
    }

    pub fn or(&mut self, a: AigLit, b: AigLit) -> AigLit {
        self.and(a ^ 1, b ^ 1) ^ 1
    }

    pub fn or_all(&mut self, lits: &[AigLit]) -> AigLit {
        match lits {
            [] => 0,
            [l] => *l,
            _ => {
                let (left, right) = lits.split_at(lits.len() / 2);
                let a = self.or_all(left);
                let b = self.or_all(right);
                self.or(a, b)
            }
        }
    }

    pub fn mux(&mut self, sel: AigLit, then: AigLit, otherwise: AigLit) -> AigLit {
        let a = self.and(sel, then);
        let b = self.and(sel ^ 1, otherwise);
        self.or(a, b)
    }

    pub fn output(&mut self, lit: AigLit) {
        self.aig.outputs.push(lit);
    }

    pub fn bad(&mut self, lit: AigLit) {
        self.aig.bad.push(lit);
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.aig.comments.push(text.into());
    }

    pub fn finish(self) -> Aig {
        self.aig
    }
}
