//! The range reduction model checker.
//!
//! The checker collapses the unrolled system one time frame at a time. In
//! the current initial frame it keeps a single input pair and excludes all
//! others with clauses that provably keep some counterexample of length at
//! most `n` if one exists. Each exclusion clause `C` is checked by computing
//! approximate range reduction formulas `H*_1, H*_2, ...`: `H*_i` is false
//! on (a superset of) the states that become unreachable in `i`
//! transitions once the pairs falsifying `C` are dropped. A bad state
//! excluded this way is either reached by a trace found walking backwards,
//! or proved unreachable by a learned clause.

mod trace;

use std::collections::HashMap;
use std::time::Instant;

use serde_json::{json, Value};

use crate::cnf::{negate_to_cnf, Clause, CnfFormula, Lit, Var, VarRole};
use crate::error::{Error, Result};
use crate::model::{TransitionSystem, Unrolling};
use crate::pqe::{brute_force_pqe, expand_clause, take_out, PqeBudget, PqeProblem};
use crate::sat::{SatResult, Solver, SolverConfig, DEFAULT_CONFLICT_LIMIT};

pub use trace::{bits_to_string, InputPair, Trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Counterexample(Trace),
    HoldsBounded(usize),
    /// Index into the collapsed trace of the state the last successor repeats.
    HoldsByLoop(usize),
    ResourceOut { phase: String, reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Counterexample(_) => "counterexample",
            Verdict::HoldsBounded(_) => "holds_bounded",
            Verdict::HoldsByLoop(_) => "holds_by_loop",
            Verdict::ResourceOut { .. } => "resource_out",
        }
    }

    pub fn is_counterexample(&self) -> bool {
        matches!(self, Verdict::Counterexample(_))
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::HoldsBounded(_) | Verdict::HoldsByLoop(_))
    }

    pub fn trace(&self) -> Option<&Trace> {
        match self {
            Verdict::Counterexample(t) => Some(t),
            _ => None,
        }
    }

    /// Converts budget exhaustion into a verdict; other errors pass through.
    pub fn from_error(e: Error) -> Result<Verdict> {
        match e {
            Error::ResourceOut { phase, reason } => Ok(Verdict::ResourceOut { phase, reason }),
            Error::PqeIncomplete { reason, .. } => Ok(Verdict::ResourceOut {
                phase: "pqe".into(),
                reason,
            }),
            e => Err(e),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CrrStats {
    pub pqe_calls: u64,
    pub sat_calls: u64,
    pub frames_collapsed: u64,
    pub clauses_learned: u64,
}

impl CrrStats {
    pub fn to_json(&self) -> Value {
        json!({
            "pqe_calls": self.pqe_calls,
            "sat_calls": self.sat_calls,
            "frames_collapsed": self.frames_collapsed,
            "clauses_learned": self.clauses_learned,
        })
    }
}

/// A verdict with the bound it was computed for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub bound: usize,
    pub stats: CrrStats,
}

impl CheckReport {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "verdict": self.verdict.name(),
            "bound": self.bound,
            "trace": self.verdict.trace().map_or(Value::Array(vec![]), Trace::to_json),
            "stats": self.stats.to_json(),
        });
        match &self.verdict {
            Verdict::HoldsByLoop(i) => v["loop_index"] = json!(i),
            Verdict::ResourceOut { phase, reason } => {
                v["phase"] = json!(phase);
                v["reason"] = json!(reason);
            }
            _ => {}
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrrConfig {
    pub seed: u64,
    /// Conflicts per SAT call.
    pub conflict_limit: u64,
    pub deadline: Option<Instant>,
    /// SAT calls allowed per PQE problem.
    pub pqe_max_queries: Option<u64>,
    /// Widen each exclusion clause against `I ∧ T` before taking it out.
    pub expand_clauses: bool,
    /// Keep an [`Event`] log for inspection.
    pub record: bool,
}

impl Default for CrrConfig {
    fn default() -> Self {
        CrrConfig {
            seed: 0,
            conflict_limit: DEFAULT_CONFLICT_LIMIT,
            deadline: None,
            pqe_max_queries: None,
            expand_clauses: false,
            record: false,
        }
    }
}

impl CrrConfig {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            conflict_limit: self.conflict_limit,
            deadline: self.deadline,
        }
    }

    fn pqe_budget(&self) -> PqeBudget {
        PqeBudget {
            max_queries: self.pqe_max_queries,
            conflict_limit: self.conflict_limit,
            deadline: self.deadline,
            seed: self.seed,
        }
    }
}

/// What the checker did, for offline validation. Formulas are over the
/// base state variables. `init` is the initial-state formula of the frame
/// being collapsed and `allowed` the exclusion clauses accepted before
/// `clause` in that frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    RangeReduction {
        init: CnfFormula,
        allowed: CnfFormula,
        clause: Clause,
        frame: usize,
        h: CnfFormula,
    },
    /// `clause` was accepted as keeping a counterexample of length at most
    /// `bound` whenever one exists.
    Certified {
        init: CnfFormula,
        allowed: CnfFormula,
        clause: Clause,
        bound: usize,
    },
    /// `clause` is false only on states unreachable from `init` in `frame`
    /// transitions.
    Learned {
        init: CnfFormula,
        frame: usize,
        clause: Clause,
    },
}

/// Outcome of a backward walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropBack {
    Trace(Trace),
    Clause(Clause),
}

/// The unreachability filters `U_0 = init, U_1, U_2, ...` over the base
/// state variables, and a solver holding `T` plus every filter behind an
/// activation literal.
pub struct Filters {
    pub u: Vec<CnfFormula>,
    solver: Solver,
    act: Vec<Lit>,
}

impl Filters {
    pub fn u(&self, j: usize) -> CnfFormula {
        self.u.get(j).cloned().unwrap_or_default()
    }
}

/// One checking session.
pub struct Checker<'a> {
    ts: &'a TransitionSystem,
    unroll: Unrolling,
    cfg: CrrConfig,
    next_to_state: HashMap<Var, Var>,
    pub stats: CrrStats,
    pub events: Vec<Event>,
}

impl<'a> Checker<'a> {
    pub fn new(ts: &'a TransitionSystem, cfg: CrrConfig) -> Checker<'a> {
        Checker {
            ts,
            unroll: Unrolling::new(ts),
            cfg,
            next_to_state: ts.next_vars.iter().copied().zip(ts.state_vars.iter().copied()).collect(),
            stats: CrrStats::default(),
            events: Vec::new(),
        }
    }

    fn solver(&self, f: &CnfFormula) -> Solver {
        let mut s = Solver::from_formula(f, self.cfg.solver_config());
        s.reserve_vars(self.unroll.pool.num_vars() as u32);
        s
    }

    fn sat(&mut self, solver: &mut Solver, assumptions: &[Lit]) -> Result<SatResult> {
        self.stats.sat_calls += 1;
        solver.solve(assumptions)
    }

    fn is_sat(&mut self, f: &CnfFormula) -> Result<bool> {
        let mut s = self.solver(f);
        Ok(self.sat(&mut s, &[])?.is_sat())
    }

    fn record(&mut self, e: impl FnOnce() -> Event) {
        if self.cfg.record {
            self.events.push(e());
        }
    }

    /// Runs the main loop for bound `n`.
    pub fn run(&mut self, n: usize) -> Result<Verdict> {
        if n == 0 {
            return Err(Error::Precondition("bound must be at least 1".into()));
        }
        let ts = self.ts;
        let mut init = ts.init.clone();
        let mut trace: Vec<InputPair> = Vec::new();
        let mut states: Vec<Vec<bool>> = Vec::new();
        for frame in 0..n {
            let Some(pair) = self.pick_input_pair(&init, &CnfFormula::new(), None)? else {
                // no initial state at all
                return Ok(Verdict::HoldsBounded(n));
            };
            let next = ts.step(&pair.state, &pair.input);
            if ts.is_bad(&next) {
                trace.push(pair);
                return Ok(Verdict::Counterexample(Trace::new(trace)));
            }
            let a = pair.falsified_clause(ts);
            if let Some(e) = self.constr_time_frame(&init, &a, n - frame)? {
                trace.extend(e.pairs);
                return Ok(Verdict::Counterexample(Trace::new(trace)));
            }
            self.stats.frames_collapsed += 1;
            states.push(pair.state.clone());
            trace.push(pair);
            if let Some(i) = states.iter().position(|s| *s == next) {
                return Ok(Verdict::HoldsByLoop(i));
            }
            init = ts.state_cube(&next);
        }
        Ok(Verdict::HoldsBounded(n))
    }

    /// A pair satisfying `init ∧ g ∧ a`, or `None`.
    pub fn pick_input_pair(
        &mut self,
        init: &CnfFormula,
        g: &CnfFormula,
        a: Option<&Clause>,
    ) -> Result<Option<InputPair>> {
        let mut f = init.clone().and(g);
        if let Some(a) = a {
            f.push(a.clone());
        }
        let mut s = self.solver(&f);
        Ok(self.sat(&mut s, &[])?.model().map(|m| InputPair {
            state: m.bits(&self.ts.state_vars),
            input: m.bits(&self.ts.input_vars),
        }))
    }

    /// Excludes every pair of the current initial frame except the one
    /// falsifying `a`, or returns a counterexample rooted in this frame.
    pub fn constr_time_frame(&mut self, init: &CnfFormula, a: &Clause, n: usize) -> Result<Option<Trace>> {
        let mut g = CnfFormula::new();
        loop {
            let Some(pair) = self.pick_input_pair(init, &g, Some(a))? else {
                return Ok(None);
            };
            let c = gen_excluding_clause(self.ts, &pair, a)?;
            if let Some(t) = self.comp_rr_form(init, &g, &c, n)? {
                return Ok(Some(t));
            }
            g.push(c);
        }
    }

    /// The exclusion clause as taken out of the first frame.
    fn first_formula(&mut self, init: &CnfFormula, c: &Clause) -> Result<CnfFormula> {
        let c = if self.cfg.expand_clauses {
            let t = init.clone().and(&self.ts.trans);
            expand_clause(c, &t, self.cfg.solver_config())?
        } else {
            c.clone()
        };
        Ok(CnfFormula::from_clauses([c]))
    }

    /// `H*_{j+1}` over `S_{j+1}` from `H*_j`: takes `H*_j` out of
    /// `∃W[H*_j ∧ T_j ∧ init ∧ allowed ∧ T_0 ∧ … ∧ T_{j-1}]`.
    fn next_range_reduction(
        &mut self,
        init: &CnfFormula,
        allowed: &CnfFormula,
        h: &CnfFormula,
        j: usize,
        exact: bool,
    ) -> Result<CnfFormula> {
        let g = self.unroll.reach_prefix(&init.clone().and(allowed), j + 1);
        let free = self.unroll.state_vars(j + 1).to_vec();
        let p = PqeProblem::with_free(h.clone(), g, free)?;
        self.stats.pqe_calls += 1;
        let sol = if exact {
            brute_force_pqe(&p)?
        } else {
            take_out(&p, &self.cfg.pqe_budget())?
        };
        self.stats.sat_calls += sol.stats.queries;
        Ok(sol.h)
    }

    /// `H*_1 … H*_n` for clause `c` over the base state variables, without
    /// any early exit. `exact` uses the enumeration oracle, giving the
    /// noise-free formulas.
    pub fn range_reduction(
        &mut self,
        init: &CnfFormula,
        allowed: &CnfFormula,
        c: &Clause,
        n: usize,
        exact: bool,
    ) -> Result<Vec<CnfFormula>> {
        let mut h = self.first_formula(init, c)?;
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            h = self.next_range_reduction(init, allowed, &h, j, exact)?;
            out.push(self.unroll.from_frame(&h, j + 1)?);
        }
        Ok(out)
    }

    /// `None` certifies that dropping the pairs falsifying `c` (on top of
    /// those already falsifying `allowed`) keeps a counterexample of length
    /// at most `n` if there is one; otherwise returns a counterexample.
    pub fn comp_rr_form(
        &mut self,
        init: &CnfFormula,
        allowed: &CnfFormula,
        c: &Clause,
        n: usize,
    ) -> Result<Option<Trace>> {
        let certified = |s: &mut Self| {
            s.record(|| Event::Certified {
                init: init.clone(),
                allowed: allowed.clone(),
                clause: c.clone(),
                bound: n,
            })
        };
        let mut filters = self.new_filters(init);
        let mut h = self.first_formula(init, c)?;
        for j in 0..n {
            let next = self.next_range_reduction(init, allowed, &h, j, false)?;
            if next.is_empty() {
                certified(self);
                return Ok(None);
            }
            let base = self.unroll.from_frame(&next, j + 1)?;
            self.record(|| Event::RangeReduction {
                init: init.clone(),
                allowed: allowed.clone(),
                clause: c.clone(),
                frame: j + 1,
                h: base.clone(),
            });
            let excluded = negate_to_cnf(&base, &mut self.unroll.pool);
            if self.is_sat(&excluded.clone().and(&self.ts.bad()))? {
                if let Some(t) = self.elim_bad_states(&base, j + 1, &mut filters)? {
                    return Ok(Some(t));
                }
            }
            // Only bad states excluded: all of them are now filtered out as
            // unreachable, so no later formula can exclude a reachable state.
            if !self.is_sat(&excluded.clone().and(&self.ts.prop()))?
                && !self.is_sat(&excluded.and(&filters.u(j + 1)))?
            {
                certified(self);
                return Ok(None);
            }
            h = next;
        }
        certified(self);
        Ok(None)
    }

    pub fn new_filters(&mut self, init: &CnfFormula) -> Filters {
        let solver = self.solver(&self.ts.trans);
        let mut f = Filters {
            u: Vec::new(),
            solver,
            act: Vec::new(),
        };
        for c in init.clauses() {
            self.add_filter(&mut f, 0, c.clone());
        }
        f.u.resize(1, CnfFormula::new());
        f
    }

    fn act(&mut self, f: &mut Filters, j: usize) -> Lit {
        while f.act.len() <= j {
            f.act.push(self.unroll.pool.fresh(VarRole::Auxiliary, None).pos());
        }
        f.act[j]
    }

    fn add_filter(&mut self, f: &mut Filters, j: usize, c: Clause) {
        let a = self.act(f, j);
        f.solver.add_clause(&c.with(!a).expect("activation literal is fresh"));
        if f.u.len() <= j {
            f.u.resize(j + 1, CnfFormula::new());
        }
        f.u[j].push(c);
    }

    /// Either finds a trace to a bad state excluded by `h` (over base state
    /// variables, for frame `j`) or filters every such state out of `U_j`.
    pub fn elim_bad_states(&mut self, h: &CnfFormula, j: usize, filters: &mut Filters) -> Result<Option<Trace>> {
        if j == 0 {
            return Err(Error::Precondition("frame must be at least 1".into()));
        }
        let mut f = negate_to_cnf(h, &mut self.unroll.pool);
        f.extend(&self.ts.bad());
        f.extend(&filters.u(j));
        let mut q = self.solver(&f);
        loop {
            let s = match self.sat(&mut q, &[])? {
                SatResult::Unsat { .. } => return Ok(None),
                SatResult::Sat(m) => m.bits(&self.ts.state_vars),
            };
            match self.prop_back(&s, j, filters)? {
                PropBack::Trace(mut t) => {
                    t.truncate_at_first_bad(self.ts);
                    return Ok(Some(t));
                }
                PropBack::Clause(c) => {
                    q.add_clause(&c);
                    self.learn(filters, j, c);
                }
            }
        }
    }

    fn learn(&mut self, filters: &mut Filters, j: usize, c: Clause) {
        self.stats.clauses_learned += 1;
        let init = filters.u(0);
        self.record(|| Event::Learned {
            init,
            frame: j,
            clause: c.clone(),
        });
        self.add_filter(filters, j, c);
    }

    /// Walks back from `s_k` at frame `k` towards frame 0 through states not
    /// yet filtered out. Returns a trace from an initial state to `s_k`, or a
    /// clause false on `s_k` proving it unreachable in `k` transitions.
    /// Clauses learned for intermediate frames go into `filters`.
    pub fn prop_back(&mut self, s_k: &[bool], k: usize, filters: &mut Filters) -> Result<PropBack> {
        if k == 0 {
            return Err(Error::Precondition(
                "bad state in frame 0 violates I→P assumption".into(),
            ));
        }
        let ts = self.ts;
        let mut states: Vec<Vec<bool>> = vec![Vec::new(); k + 1];
        states[k] = s_k.to_vec();
        let mut pairs: Vec<Option<InputPair>> = vec![None; k];
        let mut j = k;
        while j > 0 {
            let mut assumptions = vec![self.act(filters, j - 1)];
            assumptions.extend(ts.next_vars.iter().zip(&states[j]).map(|(v, &b)| v.lit(b)));
            self.stats.sat_calls += 1;
            match filters.solver.solve(&assumptions)? {
                SatResult::Sat(m) => {
                    let state = m.bits(&ts.state_vars);
                    pairs[j - 1] = Some(InputPair {
                        state: state.clone(),
                        input: m.bits(&ts.input_vars),
                    });
                    states[j - 1] = state;
                    j -= 1;
                }
                SatResult::Unsat { failed } => {
                    let core: Vec<Lit> = failed
                        .iter()
                        .filter_map(|l| self.next_to_state.get(&l.var()).map(|v| v.lit(l.polarity())))
                        .collect();
                    let c = Clause::blocking(&core).expect("state cube is consistent");
                    if j == k {
                        return Ok(PropBack::Clause(c));
                    }
                    self.learn(filters, j, c);
                    pairs[j] = None;
                    j += 1;
                }
            }
        }
        Ok(PropBack::Trace(Trace::new(pairs.into_iter().map(|p| p.expect("filled on descent")).collect())))
    }
}

/// The full-length clause over state and input variables falsified exactly
/// by `pair`. It must not also be falsified by the protected pair of `a`.
pub fn gen_excluding_clause(ts: &TransitionSystem, pair: &InputPair, a: &Clause) -> Result<Clause> {
    let c = pair.falsified_clause(ts);
    if &c == a {
        return Err(Error::Precondition("pair is the protected one".into()));
    }
    Ok(c)
}

/// Checks whether `ts` has a counterexample of length at most `n`.
pub fn mc_crr(ts: &TransitionSystem, n: usize, cfg: CrrConfig) -> Result<CheckReport> {
    let mut checker = Checker::new(ts, cfg);
    let verdict = checker.run(n).or_else(Verdict::from_error)?;
    Ok(CheckReport {
        verdict,
        bound: n,
        stats: checker.stats,
    })
}
