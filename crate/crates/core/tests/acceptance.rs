//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crr::bench::{bmc, parse_manifest, random_aig_with, run_experiment, BenchConfig, CSV_HEADER};
use crr::cnf::{Clause, CnfFormula, Lit, Var};
use crr::crr::{Checker, CrrConfig, Event, Verdict};
use crr::model::{abstract_counter, CounterSpec, Encoding, TransitionSystem};
use crr::pqe::{brute_force_pqe, expand_clause, is_noise_free_clause, qe, take_out, PqeBudget, PqeProblem};
use crr::sat::SolverConfig;

use common::{clause_holds, fix, holds, projection, random_clause, random_cnf, sat_with, Explicit, State};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Systems checked in criteria 1 and 2, with what the checker recorded.
struct Run {
    ts: TransitionSystem,
    events: Vec<Event>,
}

fn recording() -> CrrConfig {
    CrrConfig {
        record: true,
        ..CrrConfig::default()
    }
}

fn check(ts: &TransitionSystem, n: usize, runs: &mut Vec<Run>) -> Verdict {
    let mut c = Checker::new(ts, recording());
    let v = c.run(n).or_else(Verdict::from_error).expect("no hard errors");
    let events = std::mem::take(&mut c.events);
    runs.push(Run { ts: ts.clone(), events });
    v
}

const ENCODINGS: [Encoding; 2] = [Encoding::Standard, Encoding::Permuted(7)];

fn counters(ks: &[u32]) -> Vec<(CounterSpec, TransitionSystem)> {
    let mut out = Vec::new();
    for &k in ks {
        for d in 1..(1u64 << k) - 1 {
            for enc in ENCODINGS {
                let spec = CounterSpec::new(k, d, enc).unwrap();
                out.push((spec, abstract_counter(&spec).unwrap()));
            }
        }
    }
    out
}

fn criterion_1(runs: &mut Vec<Run>, grid: &mut Vec<(TransitionSystem, usize, Verdict)>) -> Outcome {
    let start = Instant::now();
    let (mut cells, mut good) = (0, 0);
    let mut bad = Vec::new();
    for (spec, ts) in counters(&[2, 3]) {
        for n in 1..=8 {
            cells += 1;
            let v = check(&ts, n, runs);
            let ok = match &v {
                Verdict::Counterexample(t) => {
                    n as u64 >= spec.d && t.len() as u64 == spec.d && t.check_counterexample(&ts).is_ok()
                }
                v => v.holds() && (n as u64) < spec.d,
            };
            if ok {
                good += 1;
            } else {
                bad.push(format!("{spec} n={n}: {}", v.name()));
            }
            grid.push((ts.clone(), n, v));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        good == cells && secs < 60.0,
        format!("{good}/{cells} cells exact, {secs:.1} s{}", first_failures(&bad)),
    )
}

fn first_failures(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.iter().take(3).cloned().collect::<Vec<_>>().join(", "))
    }
}

fn criterion_2(runs: &mut Vec<Run>, grid: &[(TransitionSystem, usize, Verdict)]) -> Outcome {
    let (mut cases, mut good) = (0, 0);
    let mut bad = Vec::new();
    let mut judge = |ts: &TransitionSystem, n: usize, crr: &Verdict, label: String| {
        cases += 1;
        let b = bmc(ts, n, SolverConfig::default()).expect("bmc finishes");
        let expected = Explicit::new(ts).shortest_cex(n);
        let replay = |v: &Verdict| v.trace().is_none_or(|t| t.check_counterexample(ts).is_ok());
        let finished = |v: &Verdict| !matches!(v, Verdict::ResourceOut { .. });
        let ok = finished(crr)
            && crr.is_counterexample() == b.is_counterexample()
            && b.is_counterexample() == expected.is_some()
            && replay(crr)
            && replay(&b)
            && b.trace().map(|t| t.len()) == expected;
        if ok {
            good += 1;
        } else {
            bad.push(format!("{label}: crr {} bmc {}", crr.name(), b.name()));
        }
    };
    for (ts, n, v) in grid {
        judge(ts, *n, v, format!("counter n={n}"));
    }
    for seed in 0..50 {
        let ts = TransitionSystem::from_aig(&random_aig_with(seed, 4, 2, 10)).unwrap();
        for n in 1..=8 {
            let v = check(&ts, n, runs);
            judge(&ts, n, &v, format!("random seed {seed} n={n}"));
        }
    }
    outcome(
        good == cases,
        format!("{good}/{cases} verdicts agree and replay{}", first_failures(&bad)),
    )
}

fn vars(range: std::ops::RangeInclusive<u32>) -> Vec<Var> {
    range.map(Var::new).collect()
}

/// A random PQE instance with `|free| ≤ 8` and `|W| ≤ 8`.
fn random_pqe(seed: u64) -> PqeProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = rng.gen_range(1..=8u32);
    let nw = rng.gen_range(1..=8u32);
    let free = vars(1..=nf);
    let w = vars(nf + 1..=nf + nw);
    let all: Vec<Var> = free.iter().chain(&w).copied().collect();
    let (nf_clauses, ng_clauses) = (rng.gen_range(1..=3), rng.gen_range(2..=2 * all.len()));
    let f = random_cnf(&mut rng, &all, nf_clauses, 3);
    let g = random_cnf(&mut rng, &all, ng_clauses, 3);
    PqeProblem::new(f, g, w.into_iter().collect(), free).unwrap()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (mut contract, mut agree) = (0, 0);
    for seed in 0..200 {
        let p = random_pqe(seed);
        let h = take_out(&p, &PqeBudget::default()).unwrap().h;
        let oracle = brute_force_pqe(&p).unwrap().h;
        let fg = p.f.clone().and(&p.g);
        let (mut ok_contract, mut ok_agree) = (true, true);
        for z in common::points(p.free.len()) {
            let at = fix(&p.free, &z);
            let in_range = sat_with(&p.g, &at);
            let lhs = holds(&h, &at) && in_range;
            ok_contract &= lhs == sat_with(&fg, &at);
            if in_range {
                ok_agree &= holds(&h, &at) == holds(&oracle, &at);
            }
        }
        contract += ok_contract as usize;
        agree += ok_agree as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        contract == 200 && agree == 200 && secs < 60.0,
        format!("contract {contract}/200, agreement with enumeration {agree}/200, {secs:.1} s"),
    )
}

fn criterion_4() -> Outcome {
    let mut good = 0;
    for seed in 0..200 {
        let p = random_pqe(10_000 + seed);
        let r = qe(&p.g, &p.quantified, &PqeBudget::default()).unwrap();
        let range = projection(&p.g, &p.free);
        let ok = common::points(p.free.len()).all(|z| holds(&r, &fix(&p.free, &z)) == range.contains(&z));
        good += ok as usize;
    }
    outcome(good == 200, format!("{good}/200 equal to the projection"))
}

fn criterion_5() -> Outcome {
    let mut good = 0;
    let mut total = 0;
    for enc in ENCODINGS {
        let spec = CounterSpec::new(3, 7, enc).unwrap();
        let ts = abstract_counter(&spec).unwrap();
        // s1 ∨ s2 ∨ s3 ∨ ¬x
        let c = Clause::new(
            ts.state_vars
                .iter()
                .map(|v| v.pos())
                .chain(ts.input_vars.iter().map(|v| v.neg())),
        )
        .unwrap();
        let ex = Explicit::new(&ts);
        let mut checker = Checker::new(&ts, CrrConfig::default());
        let hs = checker
            .range_reduction(&ts.init, &CnfFormula::new(), &c, 6, true)
            .unwrap();
        for (i, h) in hs.iter().enumerate() {
            let i = i + 1;
            total += 1;
            let want: BTreeSet<State> = [spec.state_of_value(i as u64)].into();
            if ex.excluded_by(h) == want && ex.range_reduction(&ts.init, &c, i) == want {
                good += 1;
            }
        }
    }
    outcome(
        good == total,
        format!("{good}/{total} formulas exclude exactly the state of value i"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut equivalent, mut side, mut widened) = (0, 0, 0);
    for seed in 0..100 {
        let ts = TransitionSystem::from_aig(&random_aig_with(
            seed,
            rng.gen_range(2..=4),
            rng.gen_range(1..=2),
            rng.gen_range(3..=8),
        ))
        .unwrap();
        let t = &ts.trans;
        let base: Vec<Var> = ts.state_vars.iter().chain(&ts.input_vars).copied().collect();
        let c = random_clause(&mut rng, &base, base.len());
        let wide = expand_clause(&c, t, SolverConfig::default()).unwrap();
        let pqe = |cl: &Clause| {
            let p = PqeProblem::with_free(CnfFormula::from_clauses([cl.clone()]), t.clone(), ts.next_vars.clone()).unwrap();
            brute_force_pqe(&p).unwrap().h
        };
        let (h, h_wide) = (pqe(&c), pqe(&wide));
        let free = &ts.next_vars;
        equivalent += common::points(free.len()).all(|z| holds(&h, &fix(free, &z)) == holds(&h_wide, &fix(free, &z))) as usize;
        let added: Vec<Lit> = wide.lits().iter().copied().filter(|l| !c.contains(*l)).collect();
        widened += !added.is_empty() as usize;
        // T ∧ ¬(C' minus l) ∧ l must be unsatisfiable
        side += added.iter().all(|&l| {
            let mut at: HashMap<Var, bool> = wide
                .lits()
                .iter()
                .filter(|&&m| m != l)
                .map(|m| (m.var(), !m.polarity()))
                .collect();
            at.insert(l.var(), l.polarity());
            !sat_with(t, &at)
        }) as usize;
    }
    outcome(
        equivalent == 100 && side == 100,
        format!("equivalent {equivalent}/100, side condition {side}/100 ({widened} clauses widened)"),
    )
}

fn criterion_7() -> Outcome {
    let cfg = SolverConfig::default();
    let (mut oracle_clauses, mut oracle_ok) = (0, 0);
    let mut rejected = Vec::new();
    for seed in 0..200 {
        let p = random_pqe(seed);
        for c in brute_force_pqe(&p).unwrap().h.clauses() {
            oracle_clauses += 1;
            oracle_ok += is_noise_free_clause(c, &p.g, &p.free, cfg).unwrap() as usize;
        }
        for c in take_out(&p, &PqeBudget::default()).unwrap().h.clauses() {
            if !is_noise_free_clause(c, &p.g, &p.free, cfg).unwrap() {
                // confirm: some point outside the range falsifies c
                let confirmed = common::points(p.free.len()).any(|z| {
                    let at = fix(&p.free, &z);
                    !clause_holds(c, &at) && !sat_with(&p.g, &at)
                });
                rejected.push((seed, confirmed));
            }
        }
    }
    let confirmed = rejected.iter().all(|&(_, ok)| ok);
    let example = rejected.first().map_or("none".to_string(), |(s, _)| format!("seed {s}"));
    outcome(
        oracle_ok == oracle_clauses && !rejected.is_empty() && confirmed,
        format!(
            "{oracle_ok}/{oracle_clauses} enumeration clauses certified; {} noisy clauses rejected (first: {example})",
            rejected.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut systems = Vec::new();
    let spec = CounterSpec::new(3, 7, Encoding::Standard).unwrap();
    let counter = abstract_counter(&spec).unwrap();
    let counter_clause = Clause::new(
        counter
            .state_vars
            .iter()
            .map(|v| v.pos())
            .chain(counter.input_vars.iter().map(|v| v.neg())),
    )
    .unwrap();
    systems.push((counter, counter_clause));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..25 {
        let ts = TransitionSystem::from_aig(&random_aig_with(100 + seed, rng.gen_range(3..=4), 2, 8)).unwrap();
        let input: Vec<bool> = (0..ts.num_inputs()).map(|_| rng.gen()).collect();
        let state = vec![false; ts.num_latches()];
        let lits: Vec<Lit> = ts
            .state_vars
            .iter()
            .zip(&state)
            .chain(ts.input_vars.iter().zip(&input))
            .map(|(v, &b)| v.lit(b))
            .collect();
        systems.push((ts, Clause::blocking(&lits).unwrap()));
    }
    let (mut good, mut total, mut exact_ok) = (0, 0, 0);
    for (ts, c) in &systems {
        let ex = Explicit::new(ts);
        let mut checker = Checker::new(ts, CrrConfig::default());
        let engine = checker.range_reduction(&ts.init, &CnfFormula::new(), c, 5, false).unwrap();
        let exact = checker.range_reduction(&ts.init, &CnfFormula::new(), c, 5, true).unwrap();
        for (i, (h_star, h)) in engine.iter().zip(&exact).enumerate() {
            total += 1;
            let noise_free = ex.excluded_by(h);
            exact_ok += (noise_free == ex.range_reduction(&ts.init, c, i + 1)) as usize;
            good += noise_free.is_subset(&ex.excluded_by(h_star)) as usize;
        }
    }
    outcome(
        good == total && exact_ok == total,
        format!("{good}/{total} frames contained ({exact_ok}/{total} noise-free formulas match explicit reachability)"),
    )
}

fn criterion_9(runs: &[Run]) -> Outcome {
    let (mut total, mut good) = (0, 0);
    for run in runs {
        let ex = Explicit::new(&run.ts);
        let dist = ex.dist_to_bad();
        for e in &run.events {
            if let Event::Certified {
                init,
                allowed,
                clause,
                bound,
            } = e
            {
                total += 1;
                let before = ex.pairs(init, allowed);
                let mut after_f = allowed.clone();
                after_f.push(clause.clone());
                let after = ex.pairs(init, &after_f);
                let ok = !ex.cex_from_pairs(&before, *bound, &dist) || ex.cex_from_pairs(&after, *bound, &dist);
                good += ok as usize;
            }
        }
    }
    outcome(
        good == total && total > 0,
        format!("{good}/{total} certified clauses keep a counterexample when one exists"),
    )
}

fn criterion_10(runs: &[Run]) -> Outcome {
    let (mut total, mut good) = (0, 0);
    for run in runs {
        let ex = Explicit::new(&run.ts);
        for e in &run.events {
            if let Event::Learned { init, frame, clause } = e {
                total += 1;
                let reach = ex.reachable_in(init, *frame);
                let ok = ex
                    .states
                    .iter()
                    .filter(|s| !clause_holds(clause, &fix(&run.ts.state_vars, s)))
                    .all(|s| !reach.contains(s));
                good += ok as usize;
            }
        }
    }
    outcome(
        good == total && total > 0,
        format!("{good}/{total} learned clauses exclude only unreachable states"),
    )
}

fn criterion_11() -> Outcome {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models/bench.manifest");
    let text = match std::fs::read_to_string(&manifest) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("cannot read {}: {e}", manifest.display())),
    };
    let entries = parse_manifest(&text, manifest.parent().unwrap()).unwrap();
    let expected_rows: usize = entries.iter().map(|e| e.seeds.len()).sum();
    let start = Instant::now();
    let e = run_experiment(&entries, &BenchConfig::default());
    let csv = e.to_csv();
    let header_ok = csv.lines().next() == Some(CSV_HEADER.join(",").as_str());
    let s = e.summary();
    let solved = &s["solved"];
    let rows_ok = csv.lines().count() == expected_rows + 1 && s["errors"] == 0;
    let populated = e
        .rows
        .iter()
        .all(|r| r.h_empty.is_some() && r.h_implied.is_some() && r.log2_range_lb.is_some());
    outcome(
        header_ok && rows_ok && populated && e.pqe_beats_qe(),
        format!(
            "{} rows; solved pqe raw {}, pqe expanded {}, qe full range {}; {:.1} s",
            e.rows.len(),
            solved["pqe_raw"],
            solved["pqe_expanded"],
            solved["qe_full_range"],
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let names = [
        "counter grid",
        "CRR/BMC equivalence",
        "PQE contract",
        "QE contract",
        "counter range reduction",
        "clause expansion",
        "noise-freeness certification",
        "containment of noise-free formulas",
        "certified clauses",
        "learned clauses",
        "harness shape",
    ];
    let mut runs = Vec::new();
    let mut grid = Vec::new();
    let mut results = vec![criterion_1(&mut runs, &mut grid)];
    results.push(criterion_2(&mut runs, &grid));
    results.push(criterion_3());
    results.push(criterion_4());
    results.push(criterion_5());
    results.push(criterion_6());
    results.push(criterion_7());
    results.push(criterion_8());
    results.push(criterion_9(&runs));
    results.push(criterion_10(&runs));
    results.push(criterion_11());

    let mut failed = 0;
    for (i, (name, r)) in names.iter().zip(&results).enumerate() {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name}: {}", i + 1, r.detail);
        failed += !r.passed as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", results.len());
}
