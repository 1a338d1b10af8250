//! Small exhaustive reasoning used as ground truth: a plain DPLL search
//! without learning, and truth-table projection. Shares nothing with the
//! CDCL engine beyond the clause types.

use std::collections::BTreeSet;

use crate::cnf::{Assignment, CnfFormula, Lit, Var};

struct Dpll<'a> {
    clauses: Vec<&'a [Lit]>,
    values: Vec<Option<bool>>,
    trail: Vec<usize>,
}

impl<'a> Dpll<'a> {
    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.values[l.var().index()].map(|b| l.eval(b))
    }

    fn assign(&mut self, l: Lit) {
        self.values[l.var().index()] = Some(l.polarity());
        self.trail.push(l.var().index());
    }

    fn undo(&mut self, mark: usize) {
        for v in self.trail.drain(mark..) {
            self.values[v] = None;
        }
    }

    /// Unit propagation to fixpoint; `false` on a falsified clause.
    fn propagate(&mut self) -> bool {
        loop {
            let mut changed = false;
            for i in 0..self.clauses.len() {
                let mut unassigned = None;
                let mut open = 0;
                let mut sat = false;
                for &l in self.clauses[i] {
                    match self.lit_value(l) {
                        Some(true) => {
                            sat = true;
                            break;
                        }
                        Some(false) => {}
                        None => {
                            open += 1;
                            unassigned = Some(l);
                        }
                    }
                }
                if sat {
                    continue;
                }
                match open {
                    0 => return false,
                    1 => {
                        self.assign(unassigned.expect("one open literal"));
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn branch_var(&self) -> Option<Var> {
        self.clauses
            .iter()
            .filter(|c| !c.iter().any(|&l| self.lit_value(l) == Some(true)))
            .flat_map(|c| c.iter())
            .find(|l| self.lit_value(**l).is_none())
            .map(|l| l.var())
    }

    fn search(&mut self) -> bool {
        let mark = self.trail.len();
        if !self.propagate() {
            self.undo(mark);
            return false;
        }
        let Some(v) = self.branch_var() else {
            return true;
        };
        for polarity in [false, true] {
            let inner = self.trail.len();
            self.assign(v.lit(polarity));
            if self.search() {
                return true;
            }
            self.undo(inner);
        }
        self.undo(mark);
        false
    }
}

/// Satisfiability of `formula` with the variables of `fixed` pinned.
pub fn satisfiable_under(formula: &CnfFormula, fixed: &Assignment) -> bool {
    let max = formula
        .max_var_id()
        .max(fixed.iter().map(|(v, _)| v.id()).max().unwrap_or(0));
    let mut d = Dpll {
        clauses: formula.clauses().iter().map(|c| c.lits()).collect(),
        values: vec![None; max as usize + 1],
        trail: Vec::new(),
    };
    for (v, b) in fixed.iter() {
        d.values[v.index()] = Some(b);
    }
    d.search()
}

/// Iterates all `2^vars.len()` complete assignments over `vars`; bit `i` of
/// the counter drives `vars[i]`.
pub fn all_points(vars: &[Var]) -> impl Iterator<Item = Vec<bool>> + '_ {
    assert!(vars.len() < 31, "enumeration too large");
    (0u32..1 << vars.len()).map(move |m| (0..vars.len()).map(|i| m >> i & 1 == 1).collect())
}

/// The set of points over `vars` that extend to a model of `formula`.
pub fn projection(formula: &CnfFormula, vars: &[Var]) -> BTreeSet<Vec<bool>> {
    all_points(vars)
        .filter(|bits| satisfiable_under(formula, &Assignment::from_bits(vars, bits)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dpll_basics() {
        let f = CnfFormula::from_dimacs(&[&[1, 2], &[-1, 2], &[-2, 3]]);
        assert!(satisfiable_under(&f, &Assignment::new()));
        let fixed = Assignment::from_lits([Var::new(3).neg()]);
        assert!(!satisfiable_under(&f, &fixed));
        let empty_clause = CnfFormula::from_dimacs(&[&[]]);
        assert!(!satisfiable_under(&empty_clause, &Assignment::new()));
    }

    #[test]
    fn projection_of_xor() {
        let f = CnfFormula::from_dimacs(&[&[1, 2, 3], &[-1, -2], &[-3]]);
        let p = projection(&f, &[Var::new(1), Var::new(2)]);
        assert_eq!(p, BTreeSet::from([vec![true, false], vec![false, true]]));
    }
}
