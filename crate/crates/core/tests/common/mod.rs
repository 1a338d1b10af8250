//! Ground truth for the integration tests: brute-force satisfiability and
//! explicit-state exploration by simulation. Nothing here uses the
//! library's solvers.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::Rng;

use crr::cnf::{Clause, CnfFormula, Lit, Var};
use crr::model::TransitionSystem;

pub type State = Vec<bool>;

pub fn points(width: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..1 << width).map(move |m| (0..width).map(|i| m >> i & 1 == 1).collect())
}

fn lit_value(l: Lit, values: &HashMap<Var, bool>) -> Option<bool> {
    values.get(&l.var()).map(|&b| b == l.polarity())
}

fn falsified(c: &Clause, values: &HashMap<Var, bool>) -> bool {
    c.lits().iter().all(|&l| lit_value(l, values) == Some(false))
}

/// Whether `f` has a model extending `fixed`, by backtracking over the
/// remaining variables in id order.
pub fn sat_with(f: &CnfFormula, fixed: &HashMap<Var, bool>) -> bool {
    let open: Vec<Var> = f.vars().into_iter().filter(|v| !fixed.contains_key(v)).collect();
    let mut values = fixed.clone();
    fn go(f: &CnfFormula, open: &[Var], values: &mut HashMap<Var, bool>) -> bool {
        if f.clauses().iter().any(|c| falsified(c, values)) {
            return false;
        }
        let Some((&v, rest)) = open.split_first() else {
            return true;
        };
        for b in [false, true] {
            values.insert(v, b);
            if go(f, rest, values) {
                return true;
            }
        }
        values.remove(&v);
        false
    }
    go(f, &open, &mut values)
}

pub fn fix(vars: &[Var], bits: &[bool]) -> HashMap<Var, bool> {
    vars.iter().copied().zip(bits.iter().copied()).collect()
}

/// Value of a formula whose variables are all fixed.
pub fn holds(f: &CnfFormula, values: &HashMap<Var, bool>) -> bool {
    f.clauses()
        .iter()
        .all(|c| c.lits().iter().any(|&l| lit_value(l, values).expect("variable fixed")))
}

pub fn clause_holds(c: &Clause, values: &HashMap<Var, bool>) -> bool {
    c.lits().iter().any(|&l| lit_value(l, values).expect("variable fixed"))
}

/// Free points on which `∃W[f]` holds.
pub fn projection(f: &CnfFormula, free: &[Var]) -> BTreeSet<Vec<bool>> {
    points(free.len()).filter(|z| sat_with(f, &fix(free, z))).collect()
}

pub fn random_clause(rng: &mut impl Rng, vars: &[Var], max_len: usize) -> Clause {
    let len = rng.gen_range(1..=max_len.min(vars.len()));
    let mut picked: Vec<Var> = Vec::new();
    while picked.len() < len {
        let v = vars[rng.gen_range(0..vars.len())];
        if !picked.contains(&v) {
            picked.push(v);
        }
    }
    Clause::new(picked.into_iter().map(|v| v.lit(rng.gen()))).unwrap()
}

pub fn random_cnf(rng: &mut impl Rng, vars: &[Var], clauses: usize, max_len: usize) -> CnfFormula {
    CnfFormula::from_clauses((0..clauses).map(|_| random_clause(rng, vars, max_len)))
}

/// Explicit-state view of a system, by simulation of its circuit.
pub struct Explicit<'a> {
    pub ts: &'a TransitionSystem,
    pub states: Vec<State>,
    pub inputs: Vec<Vec<bool>>,
    succ: BTreeMap<State, Vec<(Vec<bool>, State)>>,
}

impl<'a> Explicit<'a> {
    pub fn new(ts: &'a TransitionSystem) -> Explicit<'a> {
        let states: Vec<State> = points(ts.num_latches()).collect();
        let inputs: Vec<Vec<bool>> = points(ts.num_inputs()).collect();
        let succ = states
            .iter()
            .map(|s| {
                let next = inputs.iter().map(|x| (x.clone(), ts.step(s, x))).collect();
                (s.clone(), next)
            })
            .collect();
        Explicit {
            ts,
            states,
            inputs,
            succ,
        }
    }

    pub fn successors(&self, s: &State) -> &[(Vec<bool>, State)] {
        &self.succ[s]
    }

    pub fn satisfies(&self, f: &CnfFormula, s: &State) -> bool {
        holds(f, &fix(&self.ts.state_vars, s))
    }

    pub fn initial(&self, init: &CnfFormula) -> Vec<State> {
        self.states.iter().filter(|s| self.satisfies(init, s)).cloned().collect()
    }

    /// States reached in exactly `j` transitions from `init`.
    pub fn reachable_in(&self, init: &CnfFormula, j: usize) -> BTreeSet<State> {
        let mut layer: BTreeSet<State> = self.initial(init).into_iter().collect();
        for _ in 0..j {
            layer = layer
                .iter()
                .flat_map(|s| self.successors(s).iter().map(|(_, t)| t.clone()))
                .collect();
        }
        layer
    }

    /// Fewest transitions from each state to a bad state through good
    /// states; bad states are at 0.
    pub fn dist_to_bad(&self) -> HashMap<State, usize> {
        let mut pred: HashMap<&State, Vec<&State>> = HashMap::new();
        for (s, next) in &self.succ {
            for (_, t) in next {
                pred.entry(t).or_default().push(s);
            }
        }
        let mut dist: HashMap<State, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        for s in self.states.iter().filter(|s| self.ts.is_bad(s)) {
            dist.insert(s.clone(), 0);
            queue.push_back(s.clone());
        }
        while let Some(t) = queue.pop_front() {
            let d = dist[&t];
            for &s in pred.get(&t).into_iter().flatten() {
                if !self.ts.is_bad(s) && !dist.contains_key(s) {
                    dist.insert(s.clone(), d + 1);
                    queue.push_back(s.clone());
                }
            }
        }
        dist
    }

    /// Length of the shortest counterexample from the system's initial
    /// states, if at most `n`.
    pub fn shortest_cex(&self, n: usize) -> Option<usize> {
        let dist = self.dist_to_bad();
        self.initial(&self.ts.init)
            .iter()
            .filter_map(|s| dist.get(s).copied())
            .min()
            .filter(|&d| d >= 1 && d <= n)
    }

    /// Pairs `(s, x)` with `s` satisfying `init` and the pair satisfying
    /// every clause of `allowed`.
    pub fn pairs(&self, init: &CnfFormula, allowed: &CnfFormula) -> Vec<(State, Vec<bool>)> {
        let mut out = Vec::new();
        for s in self.initial(init) {
            for x in &self.inputs {
                let mut values = fix(&self.ts.state_vars, &s);
                values.extend(fix(&self.ts.input_vars, x));
                if holds(allowed, &values) {
                    out.push((s.clone(), x.clone()));
                }
            }
        }
        out
    }

    /// Some pair starts a counterexample of at most `bound` transitions.
    pub fn cex_from_pairs(&self, pairs: &[(State, Vec<bool>)], bound: usize, dist: &HashMap<State, usize>) -> bool {
        pairs.iter().any(|(s, x)| {
            let t = self.ts.step(s, x);
            dist.get(&t).is_some_and(|&d| d < bound)
        })
    }

    /// States reached in `i` transitions from `init` only through a first
    /// pair falsifying `c`.
    pub fn range_reduction(&self, init: &CnfFormula, c: &Clause, i: usize) -> BTreeSet<State> {
        let mut all: BTreeSet<State> = BTreeSet::new();
        let mut kept: BTreeSet<State> = BTreeSet::new();
        for s in self.initial(init) {
            for (x, t) in self.successors(&s) {
                all.insert(t.clone());
                let mut values = fix(&self.ts.state_vars, &s);
                values.extend(fix(&self.ts.input_vars, x));
                if clause_holds(c, &values) {
                    kept.insert(t.clone());
                }
            }
        }
        let step = |layer: &BTreeSet<State>| -> BTreeSet<State> {
            layer
                .iter()
                .flat_map(|s| self.successors(s).iter().map(|(_, t)| t.clone()))
                .collect()
        };
        for _ in 1..i {
            all = step(&all);
            kept = step(&kept);
        }
        all.difference(&kept).cloned().collect()
    }

    /// States falsifying `h`, a formula over the state variables.
    pub fn excluded_by(&self, h: &CnfFormula) -> BTreeSet<State> {
        self.states.iter().filter(|s| !self.satisfies(h, s)).cloned().collect()
    }
}
