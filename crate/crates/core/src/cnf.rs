//! Clausal representation shared by every other module: variables with
//! frame-aware identity, literals, clauses, CNF formulas, partial
//! assignments, gate-level circuits and their Tseitin encoding.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::Not;

use crate::error::{Error, Result};

/// A propositional variable. Ids start at 1 so they map directly onto
/// DIMACS numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub fn new(id: u32) -> Var {
        assert!(id > 0, "variable ids start at 1");
        Var(id)
    }

    #[inline]
    pub fn id(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }

    #[inline]
    pub fn lit(self, polarity: bool) -> Lit {
        Lit::new(self, polarity)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A variable with a polarity, packed as `id << 1 | negated`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn new(var: Var, polarity: bool) -> Lit {
        Lit(var.0 << 1 | (!polarity) as u32)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    /// `true` for the positive literal.
    #[inline]
    pub fn polarity(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = self.var().id() as i64;
        if self.polarity() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(value: i64) -> Option<Lit> {
        if value == 0 || value.unsigned_abs() > u32::MAX as u64 / 2 {
            return None;
        }
        Some(Lit::new(Var::new(value.unsigned_abs() as u32), value > 0))
    }

    /// Value of the literal under `value` for its variable.
    #[inline]
    pub fn eval(self, value: bool) -> bool {
        value == self.polarity()
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRole {
    State,
    NextState,
    Input,
    Internal,
    Auxiliary,
}

impl VarRole {
    pub fn as_str(self) -> &'static str {
        match self {
            VarRole::State => "state",
            VarRole::NextState => "next-state",
            VarRole::Input => "input",
            VarRole::Internal => "internal",
            VarRole::Auxiliary => "auxiliary",
        }
    }

    pub fn parse(s: &str) -> Option<VarRole> {
        Some(match s {
            "state" => VarRole::State,
            "next-state" => VarRole::NextState,
            "input" => VarRole::Input,
            "internal" => VarRole::Internal,
            "auxiliary" => VarRole::Auxiliary,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarInfo {
    pub role: VarRole,
    /// Set iff the variable belongs to an unrolled copy.
    pub frame: Option<u32>,
}

/// Registry of every variable a group of formulas may mention.
#[derive(Debug, Clone, Default)]
pub struct VarPool {
    infos: Vec<VarInfo>,
}

impl VarPool {
    pub fn new() -> VarPool {
        VarPool::default()
    }

    pub fn fresh(&mut self, role: VarRole, frame: Option<u32>) -> Var {
        self.infos.push(VarInfo { role, frame });
        Var::new(self.infos.len() as u32)
    }

    pub fn fresh_many(&mut self, count: usize, role: VarRole, frame: Option<u32>) -> Vec<Var> {
        (0..count).map(|_| self.fresh(role, frame)).collect()
    }

    /// Registers placeholder auxiliaries so that every id up to `max_id` is
    /// known. Used when formulas arrive without a pool (DIMACS input).
    pub fn cover(&mut self, max_id: u32) {
        while (self.infos.len() as u32) < max_id {
            self.infos.push(VarInfo {
                role: VarRole::Auxiliary,
                frame: None,
            });
        }
    }

    pub fn covering(formulas: &[&CnfFormula]) -> VarPool {
        let mut pool = VarPool::new();
        let max = formulas.iter().map(|f| f.max_var_id()).max().unwrap_or(0);
        pool.cover(max);
        pool
    }

    pub fn info(&self, v: Var) -> Option<&VarInfo> {
        self.infos.get(v.index() - 1)
    }

    pub fn set_info(&mut self, v: Var, info: VarInfo) {
        self.cover(v.id());
        self.infos[v.index() - 1] = info;
    }

    pub fn contains(&self, v: Var) -> bool {
        v.index() <= self.infos.len()
    }

    pub fn num_vars(&self) -> usize {
        self.infos.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        (1..=self.infos.len() as u32).map(Var::new)
    }
}

/// Three-valued result of evaluating under a partial assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eval {
    True,
    False,
    Undetermined,
}

/// A disjunction of literals, sorted by variable, with no duplicate
/// variables. The empty clause is false.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    /// Builds a clause, merging duplicate literals. A clause containing
    /// both polarities of a variable is rejected.
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Result<Clause> {
        let mut lits: Vec<Lit> = lits.into_iter().collect();
        lits.sort_unstable();
        lits.dedup();
        for w in lits.windows(2) {
            if w[0].var() == w[1].var() {
                return Err(Error::Tautology(w[0].var().id()));
            }
        }
        Ok(Clause { lits })
    }

    pub fn empty() -> Clause {
        Clause::default()
    }

    pub fn unit(lit: Lit) -> Clause {
        Clause { lits: vec![lit] }
    }

    /// The clause falsified exactly by the points of `cube`.
    pub fn blocking(cube: &[Lit]) -> Result<Clause> {
        Clause::new(cube.iter().map(|&l| !l))
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.binary_search(&lit).is_ok()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.lits.iter().map(|l| l.var())
    }

    /// Adds a literal. Fails if the opposite literal is present.
    pub fn with(&self, lit: Lit) -> Result<Clause> {
        Clause::new(self.lits.iter().copied().chain(std::iter::once(lit)))
    }

    /// The cube of negated literals; the points falsifying this clause.
    pub fn negation_cube(&self) -> Vec<Lit> {
        self.lits.iter().map(|&l| !l).collect()
    }

    pub fn eval(&self, a: &Assignment) -> Eval {
        let mut open = false;
        for &l in &self.lits {
            match a.get(l.var()) {
                Some(v) if l.eval(v) => return Eval::True,
                Some(_) => {}
                None => open = true,
            }
        }
        if open {
            Eval::Undetermined
        } else {
            Eval::False
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// A conjunction of clauses. The empty formula is true.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfFormula {
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new() -> CnfFormula {
        CnfFormula::default()
    }

    pub fn from_clauses(clauses: impl IntoIterator<Item = Clause>) -> CnfFormula {
        CnfFormula {
            clauses: clauses.into_iter().collect(),
        }
    }

    /// Unit clauses fixing every literal of `cube`.
    pub fn from_cube(cube: &[Lit]) -> CnfFormula {
        CnfFormula::from_clauses(cube.iter().map(|&l| Clause::unit(l)))
    }

    /// Convenience constructor from DIMACS-style integer clauses. Panics on
    /// tautologies; meant for literals written out by hand.
    pub fn from_dimacs(clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::from_clauses(clauses.iter().map(|c| {
            Clause::new(c.iter().map(|&v| Lit::from_dimacs(v).expect("nonzero literal")))
                .expect("non-tautological clause")
        }))
    }

    pub fn push(&mut self, clause: Clause) {
        self.clauses.push(clause);
    }

    pub fn extend(&mut self, other: &CnfFormula) {
        self.clauses.extend(other.clauses.iter().cloned());
    }

    pub fn and(mut self, other: &CnfFormula) -> CnfFormula {
        self.extend(other);
        self
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.clauses.iter().flat_map(|c| c.vars()).collect()
    }

    pub fn max_var_id(&self) -> u32 {
        self.clauses
            .iter()
            .flat_map(|c| c.vars())
            .map(|v| v.id())
            .max()
            .unwrap_or(0)
    }

    /// Sorted, deduplicated clause list for structural comparison.
    pub fn canonical(&self) -> Vec<Clause> {
        let mut cs = self.clauses.clone();
        cs.sort();
        cs.dedup();
        cs
    }

    pub fn check_registered(&self, pool: &VarPool) -> Result<()> {
        match self.vars().into_iter().find(|&v| !pool.contains(v)) {
            Some(v) => Err(Error::Structural(format!("variable {v} not registered"))),
            None => Ok(()),
        }
    }

    pub fn evaluate(&self, a: &Assignment) -> Eval {
        evaluate(self, a)
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// A partial map from variables to truth values.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: BTreeMap<Var, bool>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_lits(lits: impl IntoIterator<Item = Lit>) -> Assignment {
        let mut a = Assignment::new();
        for l in lits {
            a.set(l.var(), l.polarity());
        }
        a
    }

    pub fn from_bits(vars: &[Var], bits: &[bool]) -> Assignment {
        assert_eq!(vars.len(), bits.len());
        Assignment::from_lits(vars.iter().zip(bits).map(|(&v, &b)| v.lit(b)))
    }

    pub fn set(&mut self, v: Var, value: bool) {
        self.values.insert(v, value);
    }

    pub fn unset(&mut self, v: Var) {
        self.values.remove(&v);
    }

    pub fn get(&self, v: Var) -> Option<bool> {
        self.values.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_complete_over(&self, vars: &[Var]) -> bool {
        vars.iter().all(|v| self.values.contains_key(v))
    }

    /// The assignment as a cube of literals, ordered by variable.
    pub fn lits(&self) -> Vec<Lit> {
        self.values.iter().map(|(&v, &b)| v.lit(b)).collect()
    }

    /// Bits for `vars` in order; `None` if any is unassigned.
    pub fn bits(&self, vars: &[Var]) -> Option<Vec<bool>> {
        vars.iter().map(|&v| self.get(v)).collect()
    }

    pub fn restrict(&self, vars: &[Var]) -> Assignment {
        Assignment::from_lits(
            vars.iter()
                .filter_map(|&v| self.get(v).map(|b| v.lit(b))),
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, bool)> + '_ {
        self.values.iter().map(|(&v, &b)| (v, b))
    }
}

/// `true` iff every clause has a satisfied literal, `false` iff some clause
/// is fully falsified, otherwise undetermined.
pub fn evaluate(formula: &CnfFormula, a: &Assignment) -> Eval {
    let mut result = Eval::True;
    for c in formula.clauses() {
        match c.eval(a) {
            Eval::False => return Eval::False,
            Eval::Undetermined => result = Eval::Undetermined,
            Eval::True => {}
        }
    }
    result
}

/// Renames every variable through `frame_map`. The map must be total on the
/// formula's variables and injective on them.
pub fn rename_frame(formula: &CnfFormula, frame_map: &HashMap<Var, Var>) -> Result<CnfFormula> {
    let vars = formula.vars();
    let mut images = HashSet::with_capacity(vars.len());
    for &v in &vars {
        let image = *frame_map
            .get(&v)
            .ok_or_else(|| Error::Structural(format!("rename map missing {v}")))?;
        if !images.insert(image) {
            return Err(Error::NonInjectiveRename(image.id()));
        }
    }
    let clauses = formula
        .clauses()
        .iter()
        .map(|c| {
            Clause::new(c.lits().iter().map(|&l| frame_map[&l.var()].lit(l.polarity())))
                .expect("injective renaming preserves clause shape")
        })
        .collect::<Vec<_>>();
    Ok(CnfFormula::from_clauses(clauses))
}

/// Tseitin encoding of the negation of `formula`. One auxiliary per clause
/// is equivalent to that clause being false; a final clause requires one of
/// them. The projection onto the original variables is exactly the
/// complement of `formula`, and the auxiliaries are functionally determined.
pub fn negate_to_cnf(formula: &CnfFormula, pool: &mut VarPool) -> CnfFormula {
    let mut out = CnfFormula::new();
    let mut roots = Vec::with_capacity(formula.len());
    for c in formula.clauses() {
        let t = pool.fresh(VarRole::Auxiliary, None);
        roots.push(t.pos());
        // t -> not l, for every l in c
        for &l in c.lits() {
            out.push(Clause::new([t.neg(), !l]).expect("fresh auxiliary"));
        }
        // c false -> t
        out.push(Clause::new(c.lits().iter().copied().chain([t.pos()])).expect("fresh auxiliary"));
    }
    out.push(Clause::new(roots).expect("distinct auxiliaries"));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    And(Lit, Lit),
    Not(Lit),
    Const(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub output: Var,
    pub kind: GateKind,
}

impl Gate {
    pub fn and(output: Var, a: Lit, b: Lit) -> Gate {
        Gate {
            output,
            kind: GateKind::And(a, b),
        }
    }

    pub fn not(output: Var, a: Lit) -> Gate {
        Gate {
            output,
            kind: GateKind::Not(a),
        }
    }

    pub fn constant(output: Var, value: bool) -> Gate {
        Gate {
            output,
            kind: GateKind::Const(value),
        }
    }

    fn fanin(&self) -> impl Iterator<Item = Var> {
        let (a, b) = match self.kind {
            GateKind::And(a, b) => (Some(a.var()), Some(b.var())),
            GateKind::Not(a) => (Some(a.var()), None),
            GateKind::Const(_) => (None, None),
        };
        a.into_iter().chain(b)
    }
}

/// A combinational circuit over AND/NOT gates and constants.
#[derive(Debug, Clone, Default)]
pub struct Circuit {
    pub inputs: Vec<Var>,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(inputs: Vec<Var>) -> Circuit {
        Circuit {
            inputs,
            gates: Vec::new(),
        }
    }

    /// Gate indices in an order where every gate follows its fanin.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let inputs: HashSet<Var> = self.inputs.iter().copied().collect();
        let mut driver: HashMap<Var, usize> = HashMap::with_capacity(self.gates.len());
        for (i, g) in self.gates.iter().enumerate() {
            if inputs.contains(&g.output) || driver.insert(g.output, i).is_some() {
                return Err(Error::Structural(format!("{} has more than one driver", g.output)));
            }
        }
        for g in &self.gates {
            if let Some(v) = g.fanin().find(|v| !inputs.contains(v) && !driver.contains_key(v)) {
                return Err(Error::Structural(format!("undeclared wire {v}")));
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; self.gates.len()];
        let mut order = Vec::with_capacity(self.gates.len());
        for root in 0..self.gates.len() {
            if mark[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, false)];
            while let Some((g, expanded)) = stack.pop() {
                if expanded {
                    mark[g] = 2;
                    order.push(g);
                    continue;
                }
                match mark[g] {
                    2 => continue,
                    1 => return Err(Error::CyclicCircuit(self.gates[g].output.id())),
                    _ => {}
                }
                mark[g] = 1;
                stack.push((g, true));
                for v in self.gates[g].fanin() {
                    if let Some(&d) = driver.get(&v) {
                        match mark[d] {
                            1 => return Err(Error::CyclicCircuit(self.gates[d].output.id())),
                            0 => stack.push((d, false)),
                            _ => {}
                        }
                    }
                }
            }
        }
        Ok(order)
    }

    /// Evaluates every gate; the result holds the inputs and all outputs.
    pub fn simulate(&self, inputs: &Assignment) -> Result<Assignment> {
        let mut values = Assignment::new();
        for &v in &self.inputs {
            let b = inputs
                .get(v)
                .ok_or_else(|| Error::Structural(format!("input {v} unassigned")))?;
            values.set(v, b);
        }
        for i in self.topological_order()? {
            let g = self.gates[i];
            let lv = |l: Lit, a: &Assignment| l.eval(a.get(l.var()).expect("topological order"));
            let b = match g.kind {
                GateKind::And(a, b) => lv(a, &values) && lv(b, &values),
                GateKind::Not(a) => !lv(a, &values),
                GateKind::Const(c) => c,
            };
            values.set(g.output, b);
        }
        Ok(values)
    }
}

/// Tseitin encoding: satisfied by an assignment iff every gate output equals
/// the gate function of its fanin. Gate outputs serve as the auxiliaries.
pub fn tseitin_encode(circuit: &Circuit) -> Result<CnfFormula> {
    let order = circuit.topological_order()?;
    let mut f = CnfFormula::new();
    for i in order {
        let g = circuit.gates[i];
        let z = g.output;
        match g.kind {
            GateKind::And(a, b) => {
                if a == b {
                    f.push(Clause::new([z.neg(), a])?);
                    f.push(Clause::new([z.pos(), !a])?);
                } else if a == !b {
                    f.push(Clause::unit(z.neg()));
                } else {
                    f.push(Clause::new([z.neg(), a])?);
                    f.push(Clause::new([z.neg(), b])?);
                    f.push(Clause::new([z.pos(), !a, !b])?);
                }
            }
            GateKind::Not(a) => {
                f.push(Clause::new([z.neg(), !a])?);
                f.push(Clause::new([z.pos(), a])?);
            }
            GateKind::Const(c) => f.push(Clause::unit(z.lit(c))),
        }
    }
    Ok(f)
}
