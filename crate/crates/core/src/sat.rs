//! Incremental CDCL solver: two watched literals, first-UIP learning with
//! clause minimization, VSIDS, phase saving, Luby restarts, solving under
//! assumptions and failed-assumption extraction.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::{Assignment, Clause, CnfFormula, Lit, Var};
use crate::dimacs;
use crate::error::{Error, Result};

pub const DEFAULT_CONFLICT_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub seed: u64,
    /// Conflicts allowed per `solve` call.
    pub conflict_limit: u64,
    pub deadline: Option<Instant>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            conflict_limit: DEFAULT_CONFLICT_LIMIT,
            deadline: None,
        }
    }
}

/// A complete model over the solver's variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn value(&self, v: Var) -> bool {
        self.values.get(v.index()).copied().unwrap_or(false)
    }

    pub fn lit_value(&self, l: Lit) -> bool {
        l.eval(self.value(l.var()))
    }

    pub fn bits(&self, vars: &[Var]) -> Vec<bool> {
        vars.iter().map(|&v| self.value(v)).collect()
    }

    pub fn cube(&self, vars: &[Var]) -> Vec<Lit> {
        vars.iter().map(|&v| v.lit(self.value(v))).collect()
    }

    pub fn assignment(&self, vars: &[Var]) -> Assignment {
        Assignment::from_lits(self.cube(vars))
    }

    pub fn num_vars(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    /// `failed` is a subset of the assumptions that together with the clause
    /// database is unsatisfiable. Empty when the database alone is.
    Unsat { failed: Vec<Lit> },
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat { .. } => None,
        }
    }
}

/// The operations the checker needs from a SAT backend.
pub trait SatOracle {
    fn add_clause(&mut self, clause: &Clause);
    fn solve(&mut self, assumptions: &[Lit]) -> Result<SatResult>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LBool {
    True,
    False,
    Undef,
}

#[derive(Debug, Clone)]
struct ClauseData {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Debug, Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

/// Max-heap of variables ordered by activity, ties broken by lower index.
#[derive(Debug, Clone, Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarHeap {
    fn grow(&mut self, n: usize) {
        if self.pos.len() < n {
            self.pos.resize(n, None);
        }
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = Some(self.heap.len());
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.pos[self.heap[0] as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn increased(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.sift_up(i, act);
        }
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::better(act, v, self.heap[parent]) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && Self::better(act, self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !Self::better(act, self.heap[child], v) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq as i32)
}

enum SearchOutcome {
    Done(SatResult),
    Restart,
}

pub struct Solver {
    config: SolverConfig,
    rng: ChaCha8Rng,
    ok: bool,
    clauses: Vec<ClauseData>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<LBool>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    seen: Vec<bool>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(SolverConfig::default())
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Solver {
        Solver {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            ok: true,
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: vec![Vec::new(), Vec::new()],
            assigns: vec![LBool::Undef],
            level: vec![0],
            reason: vec![None],
            polarity: vec![false],
            activity: vec![0.0],
            seen: vec![false],
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 2000.0,
            stats: SolverStats::default(),
        }
    }

    pub fn from_formula(formula: &CnfFormula, config: SolverConfig) -> Solver {
        let mut s = Solver::new(config);
        s.add_formula(formula);
        s
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn set_conflict_limit(&mut self, limit: u64) {
        self.config.conflict_limit = limit;
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.config.deadline = deadline;
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len() - 1
    }

    /// Makes sure every id up to `max_id` is a solver variable.
    pub fn reserve_vars(&mut self, max_id: u32) {
        let n = max_id as usize + 1;
        if self.assigns.len() >= n {
            return;
        }
        let old = self.assigns.len();
        self.assigns.resize(n, LBool::Undef);
        self.level.resize(n, 0);
        self.reason.resize(n, None);
        self.polarity.resize(n, false);
        self.seen.resize(n, false);
        self.watches.resize(2 * n, Vec::new());
        self.activity.resize(n, 0.0);
        if self.config.seed != 0 {
            for v in old..n {
                self.activity[v] = self.rng.gen::<f64>() * 1e-5;
            }
        }
        self.heap.grow(n);
        for v in old..n {
            self.heap.insert(v as u32, &self.activity);
        }
    }

    pub fn add_formula(&mut self, formula: &CnfFormula) {
        for c in formula.clauses() {
            self.add_clause(c);
        }
    }

    /// Adds a clause to the database. Returns `false` once the database is
    /// known to be unsatisfiable.
    pub fn add_clause(&mut self, clause: &Clause) -> bool {
        if let Some(max) = clause.vars().map(|v| v.id()).max() {
            self.reserve_vars(max);
        }
        if !self.ok {
            return false;
        }
        debug_assert!(self.trail_lim.is_empty());
        let mut lits = Vec::with_capacity(clause.len());
        for &l in clause.lits() {
            match self.value(l) {
                LBool::True => return true,
                LBool::False => {}
                LBool::Undef => lits.push(l),
            }
        }
        match lits.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(lits[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(lits, false);
            }
        }
        self.ok
    }

    /// Writes the problem clauses plus root-level units as DIMACS.
    pub fn to_dimacs(&self) -> String {
        let mut f = CnfFormula::new();
        if !self.ok {
            f.push(Clause::empty());
        }
        for &l in &self.trail {
            f.push(Clause::unit(l));
        }
        for c in self.clauses.iter().filter(|c| !c.learnt && !c.deleted) {
            f.push(Clause::new(c.lits.iter().copied()).expect("solver clauses are not tautologies"));
        }
        dimacs::write(&f, self.num_vars() as u32)
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<SatResult> {
        self.stats.solves += 1;
        if let Some(max) = assumptions.iter().map(|l| l.var().id()).max() {
            self.reserve_vars(max);
        }
        if !self.ok {
            return Ok(SatResult::Unsat { failed: Vec::new() });
        }
        let start_conflicts = self.stats.conflicts;
        let mut restarts = 0u64;
        loop {
            let budget = (luby(2.0, restarts) * 100.0) as u64;
            restarts += 1;
            match self.search(budget, assumptions, start_conflicts) {
                Ok(SearchOutcome::Done(result)) => {
                    self.cancel_until(0);
                    return Ok(result);
                }
                Ok(SearchOutcome::Restart) => {
                    if self.learnts.len() as f64 >= self.max_learnts {
                        self.reduce_db();
                    }
                }
                Err(e) => {
                    self.cancel_until(0);
                    return Err(e);
                }
            }
        }
    }

    fn value(&self, l: Lit) -> LBool {
        match self.assigns[l.var().index()] {
            LBool::Undef => LBool::Undef,
            LBool::True => {
                if l.polarity() {
                    LBool::True
                } else {
                    LBool::False
                }
            }
            LBool::False => {
                if l.polarity() {
                    LBool::False
                } else {
                    LBool::True
                }
            }
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], LBool::Undef);
        self.assigns[v] = if l.polarity() { LBool::True } else { LBool::False };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(ClauseData {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = LBool::Undef;
            self.reason[v] = None;
            self.polarity[v] = l.polarity();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    /// Unit propagation. Returns a conflicting clause, if any.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.clauses[w.cref as usize].deleted {
                    continue;
                }
                if self.value(w.blocker) == LBool::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                {
                    let c = &mut self.clauses[cref].lits;
                    if c[0] == false_lit {
                        c.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let watcher = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == LBool::True {
                    ws[j] = watcher;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let lk = self.clauses[cref].lits[k];
                    if self.value(lk) != LBool::False {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[lk.code()].push(watcher);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = watcher;
                j += 1;
                if self.value(first) == LBool::False {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::from_code(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            self.bump_clause(confl);
            let skip = usize::from(p.is_some());
            let lits = self.clauses[confl as usize].lits.clone();
            for &q in &lits[skip..] {
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("at least one literal at conflict level");

        // Drop literals whose reason is subsumed by the rest of the clause.
        let before = learnt.clone();
        let mut keep = vec![learnt[0]];
        for &q in &learnt[1..] {
            let v = q.var().index();
            let redundant = match self.reason[v] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..].iter().all(|l| {
                    let lv = l.var().index();
                    self.seen[lv] || self.level[lv] == 0
                }),
            };
            if !redundant {
                keep.push(q);
            }
        }
        for l in &before {
            self.seen[l.var().index()] = false;
        }
        let mut learnt = keep;

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt)
    }

    /// Assumptions responsible for `p` (an assumption) being false.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut out = vec![p];
        if self.decision_level() == 0 {
            return out;
        }
        self.seen[p.var().index()] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            if !self.seen[v] {
                continue;
            }
            match self.reason[v] {
                None => out.push(l),
                Some(r) => {
                    for k in 1..self.clauses[r as usize].lits.len() {
                        let q = self.clauses[r as usize].lits[k].var().index();
                        if self.level[q] > 0 {
                            self.seen[q] = true;
                        }
                    }
                }
            }
            self.seen[v] = false;
        }
        self.seen[p.var().index()] = false;
        out.sort_unstable();
        out.dedup();
        out
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == LBool::Undef {
                return Some(Var::new(v).lit(self.polarity[v as usize]));
            }
        }
        None
    }

    fn reduce_db(&mut self) {
        let mut candidates: Vec<u32> = self
            .learnts
            .iter()
            .copied()
            .filter(|&c| self.clauses[c as usize].lits.len() > 2)
            .collect();
        candidates.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .partial_cmp(&self.clauses[b as usize].activity)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let remove = candidates.len() / 2;
        for &c in &candidates[..remove] {
            let first = self.clauses[c as usize].lits[0].var().index();
            let locked = self.reason[first] == Some(c) && self.assigns[first] != LBool::Undef;
            if !locked {
                let cd = &mut self.clauses[c as usize];
                cd.deleted = true;
                cd.lits = Vec::new();
            }
        }
        let clauses = &self.clauses;
        self.learnts.retain(|&c| !clauses[c as usize].deleted);
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !clauses[w.cref as usize].deleted);
        }
        self.max_learnts *= 1.1;
    }

    fn model(&self) -> Model {
        Model {
            values: self
                .assigns
                .iter()
                .map(|&a| a == LBool::True)
                .collect(),
        }
    }

    fn search(
        &mut self,
        restart_budget: u64,
        assumptions: &[Lit],
        start_conflicts: u64,
    ) -> Result<SearchOutcome> {
        let mut local_conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                local_conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Ok(SearchOutcome::Done(SatResult::Unsat { failed: Vec::new() }));
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;

                let used = self.stats.conflicts - start_conflicts;
                if used >= self.config.conflict_limit {
                    return Err(Error::ResourceOut {
                        phase: "sat".into(),
                        reason: format!("conflict limit {} reached", self.config.conflict_limit),
                    });
                }
                if used.is_multiple_of(256) {
                    if let Some(d) = self.config.deadline {
                        if Instant::now() >= d {
                            return Err(Error::ResourceOut {
                                phase: "sat".into(),
                                reason: "wall-clock deadline passed".into(),
                            });
                        }
                    }
                }
            } else {
                if local_conflicts >= restart_budget {
                    self.cancel_until(0);
                    return Ok(SearchOutcome::Restart);
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let p = assumptions[self.decision_level() as usize];
                    match self.value(p) {
                        LBool::True => self.trail_lim.push(self.trail.len()),
                        LBool::False => {
                            let failed = self.analyze_final(p);
                            return Ok(SearchOutcome::Done(SatResult::Unsat { failed }));
                        }
                        LBool::Undef => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(p) => p,
                    None => {
                        self.stats.decisions += 1;
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return Ok(SearchOutcome::Done(SatResult::Sat(self.model()))),
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, None);
            }
        }
    }
}

impl SatOracle for Solver {
    fn add_clause(&mut self, clause: &Clause) {
        Solver::add_clause(self, clause);
    }

    fn solve(&mut self, assumptions: &[Lit]) -> Result<SatResult> {
        Solver::solve(self, assumptions)
    }
}

/// One-shot satisfiability of `formula` under `assumptions`.
pub fn solve_formula(formula: &CnfFormula, assumptions: &[Lit], config: SolverConfig) -> Result<SatResult> {
    Solver::from_formula(formula, config).solve(assumptions)
}

/// `true` iff `formula` implies `clause`, i.e. `formula` with the negated
/// clause is unsatisfiable.
pub fn is_implied(formula: &CnfFormula, clause: &Clause, config: SolverConfig) -> Result<bool> {
    let mut s = Solver::from_formula(formula, config);
    Ok(!s.solve(&clause.negation_cube())?.is_sat())
}
