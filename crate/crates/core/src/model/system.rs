use std::collections::{HashMap, HashSet};

use crate::cnf::{tseitin_encode, Assignment, Circuit, Clause, CnfFormula, Gate, Lit, Var, VarPool, VarRole};
use crate::error::{Error, Result};
use crate::sat::{Solver, SolverConfig};

use super::aiger::{Aig, AigLatch, AigLit, LatchReset};

/// A sequential circuit `N(S, X, Y, S')` in CNF together with its initial
/// states and safety property.
///
/// `trans` is over state, input, internal and next-state variables. The
/// property is kept as a Tseitin-encoded cone over the state variables with
/// output literal `bad_lit`: `P = prop_cone ∧ ¬bad_lit` and
/// `¬P = prop_cone ∧ bad_lit`. The cone auxiliaries are functionally
/// determined by the state.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    pub pool: VarPool,
    pub state_vars: Vec<Var>,
    pub input_vars: Vec<Var>,
    pub internal_vars: Vec<Var>,
    pub next_vars: Vec<Var>,
    pub trans: CnfFormula,
    pub init: CnfFormula,
    pub prop_cone: CnfFormula,
    pub prop_aux: Vec<Var>,
    pub bad_lit: Lit,
    aig: Aig,
    and_order: Vec<usize>,
}

fn aig_var(lit: AigLit) -> u32 {
    lit >> 1
}

/// Translates AIGER literals of one cone into circuit literals. Constants
/// are materialized on demand as a single constant-false gate.
struct ConeBuilder<'a> {
    map: HashMap<u32, Var>,
    circuit: Circuit,
    zero: Option<Var>,
    pool: &'a mut VarPool,
    role: VarRole,
    created: Vec<Var>,
}

impl ConeBuilder<'_> {
    fn lit(&mut self, l: AigLit) -> Lit {
        let v = if aig_var(l) == 0 {
            match self.zero {
                Some(z) => z,
                None => {
                    let z = self.pool.fresh(self.role, None);
                    self.created.push(z);
                    self.circuit.gates.push(Gate::constant(z, false));
                    self.zero = Some(z);
                    z
                }
            }
        } else {
            self.map[&aig_var(l)]
        };
        v.lit(l & 1 == 0)
    }

    fn add_ands(&mut self, aig: &Aig, order: &[usize], cone: &HashSet<u32>) {
        for &i in order {
            let a = aig.ands[i];
            if !cone.contains(&aig_var(a.lhs)) {
                continue;
            }
            let out = self.pool.fresh(self.role, None);
            self.created.push(out);
            self.map.insert(aig_var(a.lhs), out);
        }
        for &i in order {
            let a = aig.ands[i];
            if !cone.contains(&aig_var(a.lhs)) {
                continue;
            }
            let (x, y) = (self.lit(a.rhs0), self.lit(a.rhs1));
            let out = self.map[&aig_var(a.lhs)];
            self.circuit.gates.push(Gate::and(out, x, y));
        }
    }
}

impl TransitionSystem {
    /// Builds the system and checks that every initial state is good.
    ///
    /// When the bad-state cone reads primary inputs, a fresh latch
    /// registering the bad signal is added (reset 0) and the property is
    /// stated over it; counterexamples then take one extra transition.
    pub fn from_aig(aig: &Aig) -> Result<TransitionSystem> {
        let mut aig = aig.clone();
        let mut bad = aig.property()?;
        let inputs: HashSet<u32> = aig.inputs.iter().map(|&l| aig_var(l)).collect();
        if aig.cone(bad).iter().any(|v| inputs.contains(v)) {
            aig.max_var += 1;
            let lit = aig.max_var * 2;
            aig.latches.push(AigLatch {
                lit,
                next: bad,
                reset: LatchReset::Zero,
            });
            bad = lit;
        }
        aig.outputs.clear();
        aig.bad = vec![bad];
        let and_order = aig.and_order()?;

        let mut pool = VarPool::new();
        let state_vars = pool.fresh_many(aig.latches.len(), VarRole::State, None);
        let input_vars = pool.fresh_many(aig.inputs.len(), VarRole::Input, None);
        let next_vars = pool.fresh_many(aig.latches.len(), VarRole::NextState, None);
        let mut leaves: HashMap<u32, Var> = HashMap::new();
        for (l, &v) in aig.latches.iter().zip(&state_vars) {
            leaves.insert(aig_var(l.lit), v);
        }
        for (&l, &v) in aig.inputs.iter().zip(&input_vars) {
            leaves.insert(aig_var(l), v);
        }

        // transition relation
        let mut next_cone = HashSet::new();
        for l in &aig.latches {
            next_cone.extend(aig.cone(l.next));
        }
        let mut tb = ConeBuilder {
            map: leaves.clone(),
            circuit: Circuit::new(state_vars.iter().chain(&input_vars).copied().collect()),
            zero: None,
            pool: &mut pool,
            role: VarRole::Internal,
            created: Vec::new(),
        };
        tb.add_ands(&aig, &and_order, &next_cone);
        for (l, &nv) in aig.latches.iter().zip(&next_vars) {
            let gate = match l.next {
                0 => Gate::constant(nv, false),
                1 => Gate::constant(nv, true),
                n => {
                    let x = tb.lit(n);
                    Gate::and(nv, x, x)
                }
            };
            tb.circuit.gates.push(gate);
        }
        let trans = tseitin_encode(&tb.circuit)?;
        let internal_vars = std::mem::take(&mut tb.created);

        // property cone over latches only
        let latch_leaves: HashMap<u32, Var> = aig
            .latches
            .iter()
            .zip(&state_vars)
            .map(|(l, &v)| (aig_var(l.lit), v))
            .collect();
        let mut pb = ConeBuilder {
            map: latch_leaves,
            circuit: Circuit::new(state_vars.clone()),
            zero: None,
            pool: &mut pool,
            role: VarRole::Auxiliary,
            created: Vec::new(),
        };
        pb.add_ands(&aig, &and_order, &aig.cone(bad));
        let bad_lit = pb.lit(bad);
        let prop_cone = tseitin_encode(&pb.circuit)?;
        let prop_aux = std::mem::take(&mut pb.created);

        let mut init = CnfFormula::new();
        for (l, &v) in aig.latches.iter().zip(&state_vars) {
            match l.reset {
                LatchReset::Zero => init.push(Clause::unit(v.neg())),
                LatchReset::One => init.push(Clause::unit(v.pos())),
                LatchReset::Uninitialized => {}
            }
        }

        let ts = TransitionSystem {
            pool,
            state_vars,
            input_vars,
            internal_vars,
            next_vars,
            trans,
            init,
            prop_cone,
            prop_aux,
            bad_lit,
            aig,
            and_order,
        };
        let mut solver = Solver::from_formula(&ts.init.clone().and(&ts.bad()), SolverConfig::default());
        if solver.solve(&[])?.is_sat() {
            return Err(Error::InitViolatesProperty);
        }
        Ok(ts)
    }

    /// `P(S)`, with the cone auxiliaries.
    pub fn prop(&self) -> CnfFormula {
        let mut f = self.prop_cone.clone();
        f.push(Clause::unit(!self.bad_lit));
        f
    }

    /// `¬P(S)`, with the cone auxiliaries.
    pub fn bad(&self) -> CnfFormula {
        let mut f = self.prop_cone.clone();
        f.push(Clause::unit(self.bad_lit));
        f
    }

    pub fn num_latches(&self) -> usize {
        self.state_vars.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_vars.len()
    }

    pub fn num_gates(&self) -> usize {
        self.aig.ands.len()
    }

    /// The AIG the system was built from, including any added bad latch.
    pub fn aig(&self) -> &Aig {
        &self.aig
    }

    fn eval_aig(&self, state: &[bool], input: &[bool]) -> Vec<bool> {
        assert_eq!(state.len(), self.aig.latches.len(), "state width");
        assert_eq!(input.len(), self.aig.inputs.len(), "input width");
        let mut val = vec![false; self.aig.max_var as usize + 1];
        for (l, &b) in self.aig.latches.iter().zip(state) {
            val[aig_var(l.lit) as usize] = b;
        }
        for (&l, &b) in self.aig.inputs.iter().zip(input) {
            val[aig_var(l) as usize] = b;
        }
        let lv = |val: &[bool], l: AigLit| val[aig_var(l) as usize] ^ (l & 1 == 1);
        for &i in &self.and_order {
            let a = self.aig.ands[i];
            val[aig_var(a.lhs) as usize] = lv(&val, a.rhs0) && lv(&val, a.rhs1);
        }
        val
    }

    /// Successor of `state` under `input`, by gate-level simulation.
    pub fn step(&self, state: &[bool], input: &[bool]) -> Vec<bool> {
        let val = self.eval_aig(state, input);
        self.aig
            .latches
            .iter()
            .map(|l| val[aig_var(l.next) as usize] ^ (l.next & 1 == 1))
            .collect()
    }

    pub fn is_bad(&self, state: &[bool]) -> bool {
        let input = vec![false; self.aig.inputs.len()];
        let val = self.eval_aig(state, &input);
        let b = self.aig.bad[0];
        val[aig_var(b) as usize] ^ (b & 1 == 1)
    }

    pub fn is_initial(&self, state: &[bool]) -> bool {
        self.aig.latches.iter().zip(state).all(|(l, &b)| match l.reset {
            LatchReset::Zero => !b,
            LatchReset::One => b,
            LatchReset::Uninitialized => true,
        })
    }

    /// State bits of a complete assignment over the state variables.
    pub fn state_of(&self, a: &Assignment) -> Option<Vec<bool>> {
        a.bits(&self.state_vars)
    }

    /// Unit cube pinning the state variables to `state`.
    pub fn state_cube(&self, state: &[bool]) -> CnfFormula {
        let lits: Vec<Lit> = self.state_vars.iter().zip(state).map(|(v, &b)| v.lit(b)).collect();
        CnfFormula::from_cube(&lits)
    }
}
