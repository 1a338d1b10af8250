//! Partial quantifier elimination: given `∃W[F ∧ G]`, find `H` over the
//! free variables with `H ∧ ∃W[G] ≡ ∃W[F ∧ G]`.
//!
//! `take_out` enumerates free points `z` on which `G` can hold while `F`
//! fails, and asks whether `F ∧ G` still admits `z`. Points it rejects
//! become clauses of `H`, shortened to the failed assumptions; accepted
//! points are blocked one by one. Shortened clauses may also reject points
//! outside the range of `G`, which is harmless noise.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use crate::cnf::{negate_to_cnf, Assignment, Clause, CnfFormula, Lit, Var, VarInfo, VarPool, VarRole};
use crate::dimacs;
use crate::error::{Error, Result};
use crate::oracle::{all_points, satisfiable_under};
use crate::sat::{SatResult, Solver, SolverConfig, DEFAULT_CONFLICT_LIMIT};

/// Largest free set `brute_force_pqe` will enumerate.
pub const ORACLE_MAX_FREE: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqeProblem {
    pub f: CnfFormula,
    pub g: CnfFormula,
    pub quantified: BTreeSet<Var>,
    pub free: Vec<Var>,
}

impl PqeProblem {
    pub fn new(f: CnfFormula, g: CnfFormula, quantified: BTreeSet<Var>, free: Vec<Var>) -> Result<PqeProblem> {
        let free_set: BTreeSet<Var> = free.iter().copied().collect();
        if free_set.len() != free.len() {
            return Err(Error::Precondition("free variables repeat".into()));
        }
        if let Some(v) = quantified.intersection(&free_set).next() {
            return Err(Error::Precondition(format!("{v} is both quantified and free")));
        }
        let used = f.vars().into_iter().chain(g.vars());
        for v in used {
            if !quantified.contains(&v) && !free_set.contains(&v) {
                return Err(Error::Precondition(format!("{v} is neither quantified nor free")));
            }
        }
        Ok(PqeProblem { f, g, quantified, free })
    }

    /// Quantifies every variable of `f` and `g` outside `free`.
    pub fn with_free(f: CnfFormula, g: CnfFormula, free: Vec<Var>) -> Result<PqeProblem> {
        let free_set: BTreeSet<Var> = free.iter().copied().collect();
        let quantified = f
            .vars()
            .into_iter()
            .chain(g.vars())
            .filter(|v| !free_set.contains(v))
            .collect();
        PqeProblem::new(f, g, quantified, free)
    }

    fn max_var_id(&self) -> u32 {
        let vars = self.quantified.iter().chain(&self.free).map(|v| v.id()).max().unwrap_or(0);
        vars.max(self.f.max_var_id()).max(self.g.max_var_id())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PqeStats {
    /// SAT calls made.
    pub queries: u64,
    /// Clauses added to `H`.
    pub generalizations: u64,
    /// Free points accepted and blocked individually.
    pub blocked_points: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqeSolution {
    pub h: CnfFormula,
    /// `false` only when `H` is known to contain no noise.
    pub noisy: bool,
    pub stats: PqeStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PqeBudget {
    pub max_queries: Option<u64>,
    /// Conflicts per SAT call.
    pub conflict_limit: u64,
    pub deadline: Option<Instant>,
    pub seed: u64,
}

impl Default for PqeBudget {
    fn default() -> Self {
        PqeBudget {
            max_queries: None,
            conflict_limit: DEFAULT_CONFLICT_LIMIT,
            deadline: None,
            seed: 0,
        }
    }
}

impl PqeBudget {
    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            seed: self.seed,
            conflict_limit: self.conflict_limit,
            deadline: self.deadline,
        }
    }
}

struct Counter<'a> {
    budget: &'a PqeBudget,
    stats: PqeStats,
}

impl Counter<'_> {
    fn solve(&mut self, solver: &mut Solver, assumptions: &[Lit], h: &CnfFormula) -> Result<SatResult> {
        let incomplete = |reason: String| Error::PqeIncomplete {
            partial: Box::new(h.clone()),
            reason,
        };
        if let Some(max) = self.budget.max_queries {
            if self.stats.queries >= max {
                return Err(incomplete(format!("query budget of {max} exhausted")));
            }
        }
        self.stats.queries += 1;
        solver.solve(assumptions).map_err(|e| match e {
            Error::ResourceOut { reason, .. } => incomplete(reason),
            e => e,
        })
    }
}

/// Free variables that occur in the problem; the others cannot matter.
fn relevant_free(p: &PqeProblem) -> Vec<Var> {
    let used: BTreeSet<Var> = p.f.vars().into_iter().chain(p.g.vars()).collect();
    p.free.iter().copied().filter(|v| used.contains(v)).collect()
}

/// Takes `F` out of `∃W[F ∧ G]`.
pub fn take_out(p: &PqeProblem, budget: &PqeBudget) -> Result<PqeSolution> {
    let cfg = budget.solver_config();
    let free = relevant_free(p);
    let mut pool = VarPool::new();
    pool.cover(p.max_var_id());

    // Q1 ranges over G ∧ ¬F minus what H and the blocks already exclude.
    let mut q1 = Solver::from_formula(&p.g, cfg);
    q1.add_formula(&negate_to_cnf(&p.f, &mut pool));
    let mut q2 = Solver::from_formula(&p.f, cfg);
    q2.add_formula(&p.g);

    let mut h = CnfFormula::new();
    let mut run = Counter {
        budget,
        stats: PqeStats::default(),
    };
    loop {
        let z = match run.solve(&mut q1, &[], &h)? {
            SatResult::Unsat { .. } => break,
            SatResult::Sat(m) => m.cube(&free),
        };
        match run.solve(&mut q2, &z, &h)? {
            SatResult::Unsat { failed } => {
                let clause = Clause::blocking(&failed).expect("assumptions are consistent");
                run.stats.generalizations += 1;
                q1.add_clause(&clause);
                if clause.is_empty() {
                    h = CnfFormula::from_clauses([clause]);
                    break;
                }
                h.push(clause);
            }
            SatResult::Sat(_) => {
                run.stats.blocked_points += 1;
                q1.add_clause(&Clause::blocking(&z).expect("cube is consistent"));
            }
        }
    }
    Ok(PqeSolution {
        noisy: !h.is_empty(),
        h,
        stats: run.stats,
    })
}

/// `R` over the free variables with `R ≡ ∃W[G]`. Runs `take_out` with
/// `G` in the role of `F` and an empty remainder.
pub fn qe(g: &CnfFormula, quantified: &BTreeSet<Var>, budget: &PqeBudget) -> Result<CnfFormula> {
    let free: Vec<Var> = g.vars().into_iter().filter(|v| !quantified.contains(v)).collect();
    let p = PqeProblem::new(g.clone(), CnfFormula::new(), quantified.clone(), free)?;
    Ok(take_out(&p, budget)?.h)
}

/// Widens `c` by every literal `l` over a variable of `t` such that
/// `t` implies `c ∨ ¬l`, repeating passes until nothing changes.
/// Candidates go by ascending variable id, positive literal first.
pub fn expand_clause(c: &Clause, t: &CnfFormula, cfg: SolverConfig) -> Result<Clause> {
    let mut solver = Solver::from_formula(t, cfg);
    let mut c = c.clone();
    loop {
        let mut changed = false;
        for v in t.vars() {
            for lit in [v.pos(), v.neg()] {
                if c.vars().any(|u| u == v) {
                    break;
                }
                // t ∧ ¬c ∧ lit unsatisfiable means t implies c ∨ ¬lit
                let mut assumptions = c.negation_cube();
                assumptions.push(lit);
                if !solver.solve(&assumptions)?.is_sat() {
                    c = c.with(lit)?;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(c);
        }
    }
}

/// `true` iff every free point falsifying `c` extends to a model of `g`,
/// i.e. no widening of `c` over the free variables is implied by `g`.
pub fn is_noise_free_clause(c: &Clause, g: &CnfFormula, free: &[Var], cfg: SolverConfig) -> Result<bool> {
    Ok(noise_free_within(c, g, free, cfg, None)?.expect("no point limit"))
}

/// As [`is_noise_free_clause`], giving up with `None` after checking
/// `max_points` free points.
pub fn noise_free_within(
    c: &Clause,
    g: &CnfFormula,
    free: &[Var],
    cfg: SolverConfig,
    max_points: Option<u64>,
) -> Result<Option<bool>> {
    if let Some(v) = c.vars().find(|v| !free.contains(v)) {
        return Err(Error::Precondition(format!("clause mentions non-free {v}")));
    }
    let used = g.vars();
    let rest: Vec<Var> = free
        .iter()
        .copied()
        .filter(|v| used.contains(v) && !c.vars().any(|u| u == *v))
        .collect();
    let mut points = Solver::new(cfg);
    points.reserve_vars(rest.iter().map(|v| v.id()).max().unwrap_or(0));
    let mut range = Solver::from_formula(g, cfg);
    let base = c.negation_cube();
    let mut checked = 0u64;
    loop {
        let z = match points.solve(&[])? {
            SatResult::Unsat { .. } => return Ok(Some(true)),
            SatResult::Sat(m) => m.cube(&rest),
        };
        if max_points.is_some_and(|max| checked >= max) {
            return Ok(None);
        }
        checked += 1;
        let mut assumptions = base.clone();
        assumptions.extend(&z);
        match range.solve(&assumptions)? {
            SatResult::Unsat { .. } => return Ok(Some(false)),
            SatResult::Sat(_) => {
                if z.is_empty() {
                    return Ok(Some(true));
                }
                points.add_clause(&Clause::blocking(&z).expect("cube is consistent"));
            }
        }
    }
}

/// Clears the noise flag when every clause of `sol.h` is noise-free.
pub fn certify(sol: &mut PqeSolution, p: &PqeProblem, cfg: SolverConfig) -> Result<bool> {
    for c in sol.h.clauses() {
        if !is_noise_free_clause(c, &p.g, &p.free, cfg)? {
            return Ok(false);
        }
    }
    sol.noisy = false;
    Ok(true)
}

/// The noise-free solution by enumeration: one full blocking clause per
/// free point in the range of `G` but not in that of `F ∧ G`.
pub fn brute_force_pqe(p: &PqeProblem) -> Result<PqeSolution> {
    if p.free.len() > ORACLE_MAX_FREE {
        return Err(Error::ScaleGuard(format!(
            "{} free variables, at most {ORACLE_MAX_FREE} supported",
            p.free.len()
        )));
    }
    let fg = p.f.clone().and(&p.g);
    let mut h = CnfFormula::new();
    let mut stats = PqeStats::default();
    for bits in all_points(&p.free) {
        let z = Assignment::from_bits(&p.free, &bits);
        stats.queries += 1;
        if !satisfiable_under(&p.g, &z) {
            continue;
        }
        stats.queries += 1;
        if !satisfiable_under(&fg, &z) {
            stats.generalizations += 1;
            h.push(Clause::blocking(&z.lits()).expect("point is consistent"));
        }
    }
    Ok(PqeSolution { h, noisy: false, stats })
}

/// Serializes a problem as DIMACS for `F`, DIMACS for `G`, and a sidecar
/// with one `v <id> <role> <frame|-> <exists|free>` line per variable.
pub fn export_problem(p: &PqeProblem, pool: Option<&VarPool>) -> (String, String, String) {
    let n = p.max_var_id();
    let mut sidecar = String::new();
    let free: BTreeSet<Var> = p.free.iter().copied().collect();
    for v in p.quantified.iter().chain(&free).copied().collect::<BTreeSet<_>>() {
        let info = pool.and_then(|pool| pool.info(v)).cloned().unwrap_or(VarInfo {
            role: if free.contains(&v) {
                VarRole::NextState
            } else {
                VarRole::Auxiliary
            },
            frame: None,
        });
        let frame = info.frame.map_or("-".to_string(), |f| f.to_string());
        let scope = if free.contains(&v) { "free" } else { "exists" };
        let _ = writeln!(sidecar, "v {} {} {} {}", v.id(), info.role.as_str(), frame, scope);
    }
    (dimacs::write(&p.f, n), dimacs::write(&p.g, n), sidecar)
}

/// Inverse of `export_problem`. Without a scope column, next-state
/// variables are free and all others quantified.
pub fn import_problem(f_text: &str, g_text: &str, sidecar: &str) -> Result<(PqeProblem, VarPool)> {
    let f = dimacs::parse(f_text)?;
    let g = dimacs::parse(g_text)?;
    let mut pool = VarPool::new();
    pool.cover(f.num_vars.max(g.num_vars));
    let mut quantified = BTreeSet::new();
    let mut free = Vec::new();
    for (idx, line) in sidecar.lines().enumerate() {
        let line_no = idx + 1;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() || parts[0] == "c" {
            continue;
        }
        if parts[0] != "v" || !(4..=5).contains(&parts.len()) {
            return Err(Error::parse(line_no, "expected `v <id> <role> <frame> [exists|free]`"));
        }
        let id: u32 = parts[1]
            .parse()
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| Error::parse(line_no, "bad variable id"))?;
        let role = VarRole::parse(parts[2]).ok_or_else(|| Error::parse(line_no, "unknown role"))?;
        let frame = match parts[3] {
            "-" => None,
            s => Some(s.parse().map_err(|_| Error::parse(line_no, "bad frame"))?),
        };
        let is_free = match parts.get(4) {
            Some(&"free") => true,
            Some(&"exists") => false,
            Some(_) => return Err(Error::parse(line_no, "scope must be `exists` or `free`")),
            None => role == VarRole::NextState,
        };
        let v = Var::new(id);
        pool.set_info(v, VarInfo { role, frame });
        if is_free {
            free.push(v);
        } else {
            quantified.insert(v);
        }
    }
    Ok((PqeProblem::new(f.formula, g.formula, quantified, free)?, pool))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Gate;
    use crate::cnf::{tseitin_encode, Circuit};
    use crate::oracle::projection;

    fn v(i: u32) -> Var {
        Var::new(i)
    }

    fn and_gate() -> CnfFormula {
        // z(3) = a(1) ∧ b(2)
        let mut c = Circuit::new(vec![v(1), v(2)]);
        c.gates.push(Gate::and(v(3), v(1).pos(), v(2).pos()));
        tseitin_encode(&c).unwrap()
    }

    fn problem(f: CnfFormula, g: CnfFormula, free: &[u32]) -> PqeProblem {
        PqeProblem::with_free(f, g, free.iter().map(|&i| v(i)).collect()).unwrap()
    }

    fn solved(p: &PqeProblem) -> PqeSolution {
        take_out(p, &PqeBudget::default()).unwrap()
    }

    #[test]
    fn empty_f_gives_empty_h() {
        let p = problem(CnfFormula::new(), and_gate(), &[3]);
        assert!(solved(&p).h.is_empty());
        assert!(brute_force_pqe(&p).unwrap().h.is_empty());
    }

    #[test]
    fn clause_of_g_is_noise() {
        let g = and_gate();
        let f = CnfFormula::from_clauses([g.clauses()[0].clone()]);
        let sol = solved(&problem(f, g, &[3]));
        assert!(sol.h.is_empty());
        assert!(!sol.noisy);
    }

    #[test]
    fn and_gate_with_constrained_input() {
        let f = CnfFormula::from_dimacs(&[&[-1]]);
        let p = problem(f, and_gate(), &[3]);
        let want = CnfFormula::from_dimacs(&[&[-3]]);
        assert_eq!(solved(&p).h, want);
        assert_eq!(brute_force_pqe(&p).unwrap().h, want);
    }

    #[test]
    fn qe_examples() {
        let w = BTreeSet::from([v(1)]);
        // buffer z = a
        let buffer = CnfFormula::from_dimacs(&[&[-2, 1], &[2, -1]]);
        assert!(qe(&buffer, &w, &PqeBudget::default()).unwrap().is_empty());
        // z = a ∧ ¬a
        let mut c = Circuit::new(vec![v(1)]);
        c.gates.push(Gate::and(v(2), v(1).pos(), v(1).neg()));
        let constant = tseitin_encode(&c).unwrap();
        let r = qe(&constant, &w, &PqeBudget::default()).unwrap();
        assert_eq!(r, CnfFormula::from_dimacs(&[&[-2]]));
        // z1 = a, z2 = ¬a
        let pair = CnfFormula::from_dimacs(&[&[-2, 1], &[2, -1], &[-3, -1], &[3, 1]]);
        let r = qe(&pair, &w, &PqeBudget::default()).unwrap();
        assert_eq!(
            projection(&r, &[v(2), v(3)]),
            BTreeSet::from([vec![true, false], vec![false, true]])
        );
    }

    #[test]
    fn expansion_examples() {
        let cfg = SolverConfig::default();
        let t = CnfFormula::from_dimacs(&[&[-1, 2]]);
        let b = Clause::unit(v(2).pos());
        assert_eq!(expand_clause(&b, &t, cfg).unwrap(), Clause::new([v(1).pos(), v(2).pos()]).unwrap());
        let a = Clause::unit(v(1).pos());
        assert_eq!(expand_clause(&a, &t, cfg).unwrap(), a);
        assert_eq!(expand_clause(&a, &CnfFormula::new(), cfg).unwrap(), a);
    }

    #[test]
    fn noise_free_examples() {
        let cfg = SolverConfig::default();
        let mut c = Circuit::new(vec![v(1)]);
        c.gates.push(Gate::and(v(2), v(1).pos(), v(1).neg()));
        let constant = tseitin_encode(&c).unwrap();
        let not_z = Clause::unit(v(2).neg());
        assert!(!is_noise_free_clause(&not_z, &constant, &[v(2)], cfg).unwrap());
        let buffer = CnfFormula::from_dimacs(&[&[-2, 1], &[2, -1]]);
        assert!(is_noise_free_clause(&not_z, &buffer, &[v(2)], cfg).unwrap());
        let copies = CnfFormula::from_dimacs(&[&[-2, 1], &[2, -1], &[-3, 1], &[3, -1]]);
        assert!(!is_noise_free_clause(&not_z, &copies, &[v(2), v(3)], cfg).unwrap());
    }

    #[test]
    fn unsatisfiable_f_and_g_gives_false() {
        let f = CnfFormula::from_dimacs(&[&[-1], &[1, 2]]);
        let g = CnfFormula::from_dimacs(&[&[-2]]);
        let sol = solved(&problem(f, g, &[3]));
        assert_eq!(sol.h, CnfFormula::from_clauses([Clause::empty()]));
    }

    #[test]
    fn query_budget_reports_partial_result() {
        let f = CnfFormula::from_dimacs(&[&[-1]]);
        let p = problem(f, and_gate(), &[3]);
        let budget = PqeBudget {
            max_queries: Some(1),
            ..PqeBudget::default()
        };
        assert!(matches!(take_out(&p, &budget), Err(Error::PqeIncomplete { .. })));
    }

    #[test]
    fn brute_force_refuses_large_free_sets() {
        let free: Vec<u32> = (1..=17).collect();
        let p = problem(CnfFormula::new(), CnfFormula::new(), &free);
        assert!(matches!(brute_force_pqe(&p), Err(Error::ScaleGuard(_))));
    }

    #[test]
    fn export_import_roundtrip() {
        let f = CnfFormula::from_dimacs(&[&[-1]]);
        let p = problem(f, and_gate(), &[3]);
        let (ft, gt, side) = export_problem(&p, None);
        let (q, pool) = import_problem(&ft, &gt, &side).unwrap();
        assert_eq!(q, p);
        assert_eq!(pool.info(v(3)).unwrap().role, VarRole::NextState);
        let bare: String = side
            .lines()
            .map(|l| l.rsplit_once(' ').unwrap().0.to_string() + "\n")
            .collect();
        let (q, _) = import_problem(&ft, &gt, &bare).unwrap();
        assert_eq!(q.free, vec![v(3)]);
    }
}
