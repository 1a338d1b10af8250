use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::cnf::{Clause, CnfFormula, Var};
use crate::error::{Error, Result};
use crate::model::{abstract_counter, parse_aiger, CounterSpec, TransitionSystem};
use crate::pqe::{expand_clause, qe, take_out, PqeBudget, PqeProblem, PqeSolution};
use crate::sat::{is_implied, SolverConfig, DEFAULT_CONFLICT_LIMIT};

use super::{estimate_range_size, random_aig, random_input_clause, RangeEstimate};

pub const CSV_HEADER: [&str; 9] = [
    "model",
    "x_inputs",
    "latches",
    "gates",
    "pqe_s",
    "qe_s",
    "h_empty",
    "h_implied",
    "log2_range_lb",
];

/// Budget shared by every PQE and QE problem of a row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    /// SAT calls allowed per problem.
    pub max_queries: Option<u64>,
    /// Conflicts per SAT call.
    pub conflict_limit: u64,
    /// Wall-clock guard per problem.
    pub wall_secs: f64,
    pub range: RangeEstimate,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            max_queries: Some(200),
            conflict_limit: DEFAULT_CONFLICT_LIMIT,
            wall_secs: 10.0,
            range: RangeEstimate::default(),
        }
    }
}

impl BenchConfig {
    fn budget(&self, seed: u64) -> PqeBudget {
        PqeBudget {
            max_queries: self.max_queries,
            conflict_limit: self.conflict_limit,
            deadline: Some(Instant::now() + Duration::from_secs_f64(self.wall_secs)),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSource {
    Aiger(PathBuf),
    Counter(CounterSpec),
    Random(u64),
}

impl ModelSource {
    pub fn load(&self) -> Result<TransitionSystem> {
        match self {
            ModelSource::Aiger(path) => TransitionSystem::from_aig(&parse_aiger(&std::fs::read(path)?)?),
            ModelSource::Counter(spec) => abstract_counter(spec),
            ModelSource::Random(seed) => TransitionSystem::from_aig(&random_aig(*seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// The model as written in the manifest.
    pub label: String,
    pub source: ModelSource,
    pub seeds: Vec<u64>,
}

/// Parses a manifest: one model per line followed by optional seeds
/// (default `1`). A model is an `.aag` path relative to `base`,
/// `counter:k=..,d=..[,perm=..]` or `random:seed=..`. Blank lines and
/// `#` comments are skipped.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        let label = words.next().expect("line is not blank").to_string();
        let source = if let Some(spec) = label.strip_prefix("counter:") {
            ModelSource::Counter(spec.parse()?)
        } else if let Some(rest) = label.strip_prefix("random:") {
            let seed = rest
                .strip_prefix("seed=")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(i + 1, format!("expected random:seed=N, got `{label}`")))?;
            ModelSource::Random(seed)
        } else {
            ModelSource::Aiger(base.join(&label))
        };
        let mut seeds = words
            .map(|w| w.parse().map_err(|_| Error::parse(i + 1, format!("bad seed `{w}`"))))
            .collect::<Result<Vec<u64>>>()?;
        if seeds.is_empty() {
            seeds.push(1);
        }
        entries.push(ManifestEntry { label, source, seeds });
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MethodResult {
    pub solved: bool,
    pub secs: f64,
}

impl MethodResult {
    fn cell(&self) -> String {
        if self.solved {
            format!("{:.3}", self.secs)
        } else {
            "timeout".into()
        }
    }
}

/// Runs `f`, counting budget exhaustion as unsolved.
fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(MethodResult, Option<T>)> {
    let start = Instant::now();
    let r = f();
    let secs = start.elapsed().as_secs_f64();
    match r {
        Ok(v) => Ok((MethodResult { solved: true, secs }, Some(v))),
        Err(e) if e.is_resource_out() => Ok((MethodResult { solved: false, secs }, None)),
        Err(e) => Err(e),
    }
}

/// One model and seed.
///
/// The full-length clause `C` over the state variables is taken out of
/// `∃W[C ∧ T]` raw and after expansion, and the full range `∃W[T]` is
/// computed by QE; `pqe_s`, `h_empty` and `h_implied` describe the
/// expanded run and `qe_s` the full range. With a clause `C'` of
/// `0.7 · |S|` literals, `C'` is taken out of `∃W[C' ∧ T]`, `∃W[¬C' ∧ T]`
/// is computed by QE, and `log2_range_lb` bounds the size of the latter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentRow {
    pub model: String,
    pub x_inputs: usize,
    pub latches: usize,
    pub gates: usize,
    pub raw: MethodResult,
    pub expanded: MethodResult,
    pub full_range: MethodResult,
    pub partial_pqe: MethodResult,
    pub partial_qe: MethodResult,
    pub h_empty: Option<bool>,
    pub h_implied: Option<bool>,
    pub log2_range_lb: Option<usize>,
    pub error: Option<String>,
}

impl ExperimentRow {
    fn record(&self) -> Vec<String> {
        let flag = |f: Option<bool>| f.map_or(String::new(), |b| b.to_string());
        if self.error.is_some() {
            let mut r = vec![self.model.clone(), String::new(), String::new(), String::new()];
            r.extend(["error".to_string(), "error".to_string()]);
            r.extend([String::new(), String::new(), String::new()]);
            return r;
        }
        vec![
            self.model.clone(),
            self.x_inputs.to_string(),
            self.latches.to_string(),
            self.gates.to_string(),
            self.expanded.cell(),
            self.full_range.cell(),
            flag(self.h_empty),
            flag(self.h_implied),
            self.log2_range_lb.map_or(String::new(), |b| b.to_string()),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Experiment {
    pub rows: Vec<ExperimentRow>,
}

impl Experiment {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.record()).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("records are UTF-8")
    }

    fn count(&self, f: impl Fn(&ExperimentRow) -> bool) -> usize {
        self.rows.iter().filter(|r| f(r)).count()
    }

    pub fn summary(&self) -> Value {
        json!({
            "rows": self.rows.len(),
            "errors": self.count(|r| r.error.is_some()),
            "solved": {
                "pqe_raw": self.count(|r| r.raw.solved),
                "pqe_expanded": self.count(|r| r.expanded.solved),
                "qe_full_range": self.count(|r| r.full_range.solved),
                "pqe_partial_clause": self.count(|r| r.partial_pqe.solved),
                "qe_partial_clause": self.count(|r| r.partial_qe.solved),
            },
            "h_empty": self.count(|r| r.h_empty == Some(true)),
            "h_implied": self.count(|r| r.h_implied == Some(true)),
            "h_reducing": self.count(|r| r.h_empty == Some(false) && r.h_implied == Some(false)),
        })
    }

    /// Each way of computing range reduction solved more rows than the
    /// full-range QE baseline.
    pub fn pqe_beats_qe(&self) -> bool {
        let qe = self.count(|r| r.full_range.solved);
        self.count(|r| r.raw.solved) > qe && self.count(|r| r.expanded.solved) > qe
    }
}

fn take_out_clause(c: &Clause, t: &CnfFormula, free: &[Var], budget: &PqeBudget) -> Result<PqeSolution> {
    let p = PqeProblem::with_free(CnfFormula::from_clauses([c.clone()]), t.clone(), free.to_vec())?;
    take_out(&p, budget)
}

fn expand_and_take_out(c: &Clause, t: &CnfFormula, free: &[Var], budget: &PqeBudget) -> Result<PqeSolution> {
    let cfg = SolverConfig {
        seed: budget.seed,
        conflict_limit: budget.conflict_limit,
        deadline: budget.deadline,
    };
    let expanded = expand_clause(c, t, cfg)?;
    take_out_clause(&expanded, t, free, budget)
}

fn quantified_outside(f: &CnfFormula, free: &[Var]) -> BTreeSet<Var> {
    f.vars().into_iter().filter(|v| !free.contains(v)).collect()
}

fn run_row(ts: &TransitionSystem, model: String, seed: u64, cfg: &BenchConfig) -> Result<ExperimentRow> {
    let t = &ts.trans;
    let free = &ts.next_vars;
    let mut row = ExperimentRow {
        model,
        x_inputs: ts.num_inputs(),
        latches: ts.num_latches(),
        gates: ts.num_gates(),
        ..ExperimentRow::default()
    };

    let c = random_input_clause(ts, 1.0, seed)?;
    row.raw = timed(|| take_out_clause(&c, t, free, &cfg.budget(seed)))?.0;
    let (expanded, h) = timed(|| expand_and_take_out(&c, t, free, &cfg.budget(seed)))?;
    row.expanded = expanded;
    if let Some(sol) = h {
        row.h_empty = Some(sol.h.is_empty());
        let mut implied = !sol.h.is_empty();
        for clause in sol.h.clauses() {
            implied = implied && is_implied(t, clause, SolverConfig::default())?;
        }
        row.h_implied = Some(implied);
    }
    row.full_range = timed(|| qe(t, &quantified_outside(t, free), &cfg.budget(seed)))?.0;

    let partial = random_input_clause(ts, 0.7, seed)?;
    row.partial_pqe = timed(|| expand_and_take_out(&partial, t, free, &cfg.budget(seed)))?.0;
    let excluded = CnfFormula::from_cube(&partial.negation_cube()).and(t);
    let (partial_qe, range) = timed(|| qe(&excluded, &quantified_outside(&excluded, free), &cfg.budget(seed)))?;
    row.partial_qe = partial_qe;
    let est_cfg = SolverConfig {
        seed,
        conflict_limit: cfg.conflict_limit,
        deadline: Some(Instant::now() + Duration::from_secs_f64(cfg.wall_secs)),
    };
    // The QE result, when there is one, is over the free variables alone and
    // much cheaper to cover with cubes.
    let target = range.as_ref().unwrap_or(&excluded);
    row.log2_range_lb = match estimate_range_size(target, free, cfg.range, est_cfg) {
        Ok(b) => b,
        Err(e) if e.is_resource_out() => None,
        Err(e) => return Err(e),
    };
    Ok(row)
}

/// One row per model and seed. A model that fails to load or a row that
/// hits an unexpected error is recorded as an error row; the run goes on.
pub fn run_experiment(entries: &[ManifestEntry], cfg: &BenchConfig) -> Experiment {
    let mut rows = Vec::new();
    for entry in entries {
        let ts = entry.source.load();
        for &seed in &entry.seeds {
            let model = format!("{}#{seed}", entry.label);
            let row = match &ts {
                Ok(ts) => run_row(ts, model.clone(), seed, cfg),
                Err(e) => Err(Error::InvalidSpec(e.to_string())),
            };
            rows.push(row.unwrap_or_else(|e| ExperimentRow {
                model,
                error: Some(e.to_string()),
                ..ExperimentRow::default()
            }));
        }
    }
    Experiment { rows }
}
