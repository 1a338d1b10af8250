//! Baselines and experiments: bounded model checking, random constraining
//! clauses, range size estimation, random systems and the PQE versus QE
//! harness.

mod experiment;
mod random;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::{negate_to_cnf, Clause, CnfFormula, Lit, Var, VarPool};
use crate::crr::{mc_crr, CrrConfig, InputPair, Trace, Verdict};
use crate::error::{Error, Result};
use crate::model::{abstract_counter, CounterSpec, Encoding, TransitionSystem, Unrolling};
use crate::pqe::noise_free_within;
use crate::sat::{SatResult, Solver, SolverConfig};

pub use experiment::{
    parse_manifest, run_experiment, BenchConfig, Experiment, ExperimentRow, ManifestEntry, MethodResult,
    ModelSource, CSV_HEADER,
};
pub use random::{random_aig, random_aig_with};

/// Checks `I ∧ T_0 ∧ … ∧ T_{i-1} ∧ ¬P_i` for `i = 1..=n` on one incremental
/// solver. The first satisfiable depth gives a shortest counterexample.
pub fn bmc(ts: &TransitionSystem, n: usize, cfg: SolverConfig) -> Result<Verdict> {
    if n == 0 {
        return Err(Error::Precondition("bound must be at least 1".into()));
    }
    let mut u = Unrolling::new(ts);
    let mut solver = Solver::from_formula(&ts.init, cfg);
    for i in 1..=n {
        let t = u.unroll(i - 1).clone();
        solver.add_formula(&t);
        let (cone, bad) = u.property_at(i);
        let cone = cone.clone();
        solver.add_formula(&cone);
        if let SatResult::Sat(m) = solver.solve(&[bad])? {
            let pairs = (0..i)
                .map(|j| InputPair {
                    state: m.bits(u.state_vars(j)),
                    input: m.bits(u.input_vars(j)),
                })
                .collect();
            return Ok(Verdict::Counterexample(Trace::new(pairs)));
        }
    }
    Ok(Verdict::HoldsBounded(n))
}

/// A clause of `round(fraction · |S|)` literals (at least one) over
/// distinct state variables, with seeded choice of variables and signs.
pub fn random_input_clause(ts: &TransitionSystem, fraction: f64, seed: u64) -> Result<Clause> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Precondition(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let s = &ts.state_vars;
    if s.is_empty() {
        return Err(Error::Precondition("system has no state variables".into()));
    }
    let len = ((fraction * s.len() as f64).round() as usize).clamp(1, s.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, s.len(), len).into_vec();
    picked.sort_unstable();
    let lits: Vec<Lit> = picked.into_iter().map(|i| s[i].lit(rng.gen())).collect();
    Clause::new(lits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeEstimate {
    /// Satisfying assignments to generalize.
    pub max_cubes: usize,
    /// Free points checked per cube when `G` has quantified variables; a
    /// cube whose check does not finish is not widened.
    pub max_points: u64,
}

impl Default for RangeEstimate {
    fn default() -> Self {
        RangeEstimate {
            max_cubes: 16,
            max_points: 4096,
        }
    }
}

/// Lower bound on `log2 |∃W[G]|` over `free`: the largest number of free
/// variables a cube inside the range leaves open. Cubes come from models
/// of `G`, shortened by dropping literals in descending variable order in
/// a single pass. `None` when `G` is unsatisfiable.
pub fn estimate_range_size(
    g: &CnfFormula,
    free: &[Var],
    opts: RangeEstimate,
    cfg: SolverConfig,
) -> Result<Option<usize>> {
    let mut order = free.to_vec();
    order.sort_unstable_by(|a, b| b.cmp(a));
    order.dedup();
    let used = g.vars();
    let closed = used.iter().all(|v| order.contains(v));

    let mut models = Solver::from_formula(g, cfg);
    models.reserve_vars(order.first().map_or(0, |v| v.id()));
    // With no quantified variables, a cube lies in the range iff it implies G.
    let mut outside = closed.then(|| {
        let mut pool = VarPool::covering(&[g]);
        pool.cover(order.first().map_or(0, |v| v.id()));
        Solver::from_formula(&negate_to_cnf(g, &mut pool), cfg)
    });

    let mut best = None;
    for _ in 0..opts.max_cubes {
        let mut cube = match models.solve(&[])? {
            SatResult::Unsat { .. } => break,
            SatResult::Sat(m) => m.cube(&order),
        };
        let mut i = 0;
        while i < cube.len() {
            let mut shorter = cube.clone();
            shorter.remove(i);
            let inside = match &mut outside {
                Some(s) => !s.solve(&shorter)?.is_sat(),
                None => {
                    let c = Clause::blocking(&shorter).expect("cube is consistent");
                    noise_free_within(&c, g, &order, cfg, Some(opts.max_points))? == Some(true)
                }
            };
            if inside {
                cube = shorter;
            } else {
                i += 1;
            }
        }
        best = best.max(Some(order.len() - cube.len()));
        if cube.is_empty() {
            break;
        }
        models.add_clause(&Clause::blocking(&cube).expect("cube is consistent"));
    }
    Ok(best)
}

/// One cell of the counter verdict grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCell {
    pub k: u32,
    pub d: u64,
    pub n: usize,
    pub encoding: Encoding,
    pub crr: Verdict,
    pub bmc: Verdict,
    /// Both engines finished and agree on whether the property fails.
    pub agree: bool,
}

/// Runs both engines on every counter with `k` in `ks`, `d` in
/// `1..=2^k - 2`, `n` in `ns` and each encoding.
pub fn verdict_grid(
    ks: &[u32],
    ns: std::ops::RangeInclusive<usize>,
    encodings: &[Encoding],
    cfg: CrrConfig,
) -> Result<Vec<GridCell>> {
    let mut cells = Vec::new();
    for &k in ks {
        for d in 1..(1u64 << k) - 1 {
            for &encoding in encodings {
                let spec = CounterSpec::new(k, d, encoding)?;
                let ts = abstract_counter(&spec)?;
                for n in ns.clone() {
                    let crr = mc_crr(&ts, n, cfg)?.verdict;
                    let bmc = bmc(&ts, n, cfg.solver_config()).or_else(Verdict::from_error)?;
                    let finished = |v: &Verdict| !matches!(v, Verdict::ResourceOut { .. });
                    let agree = finished(&crr) && finished(&bmc) && crr.is_counterexample() == bmc.is_counterexample();
                    cells.push(GridCell {
                        k,
                        d,
                        n,
                        encoding,
                        crr,
                        bmc,
                        agree,
                    });
                }
            }
        }
    }
    Ok(cells)
}
