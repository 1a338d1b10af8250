use std::collections::{BTreeSet, HashMap};

use crate::cnf::{rename_frame, CnfFormula, Lit, Var, VarInfo, VarPool, VarRole};
use crate::error::{Error, Result};

use super::system::TransitionSystem;

/// Time-frame expansion of a transition system.
///
/// Frame 0 reuses the system's own state, input and internal variables, and
/// frame 1's state variables are the system's next-state variables, so
/// `T_0` is `T` itself. Later frames get fresh variables. Frames are built
/// on demand and cached.
#[derive(Debug, Clone)]
pub struct Unrolling {
    ts: TransitionSystem,
    pub pool: VarPool,
    states: Vec<Vec<Var>>,
    inputs: Vec<Vec<Var>>,
    trans: Vec<CnfFormula>,
    props: Vec<(CnfFormula, Lit)>,
}

impl Unrolling {
    pub fn new(ts: &TransitionSystem) -> Unrolling {
        Unrolling {
            pool: ts.pool.clone(),
            states: vec![ts.state_vars.clone(), ts.next_vars.clone()],
            inputs: vec![ts.input_vars.clone()],
            trans: vec![ts.trans.clone()],
            props: vec![(ts.prop_cone.clone(), ts.bad_lit)],
            ts: ts.clone(),
        }
    }

    pub fn system(&self) -> &TransitionSystem {
        &self.ts
    }

    fn fresh_like(&mut self, vars: &[Var], role: VarRole, frame: u32) -> Vec<Var> {
        self.pool.fresh_many(vars.len(), role, Some(frame))
    }

    fn ensure(&mut self, j: usize) {
        while self.trans.len() <= j {
            let f = self.trans.len();
            let mut map: HashMap<Var, Var> = HashMap::new();
            let ts_inputs = self.ts.input_vars.clone();
            let ts_internal = self.ts.internal_vars.clone();
            let inputs = self.fresh_like(&ts_inputs, VarRole::Input, f as u32);
            let internal = self.fresh_like(&ts_internal, VarRole::Internal, f as u32);
            let ts_next = self.ts.next_vars.clone();
            let next = self.fresh_like(&ts_next, VarRole::State, f as u32 + 1);
            map.extend(self.ts.state_vars.iter().copied().zip(self.states[f].iter().copied()));
            map.extend(ts_inputs.iter().copied().zip(inputs.iter().copied()));
            map.extend(ts_internal.iter().copied().zip(internal));
            map.extend(ts_next.iter().copied().zip(next.iter().copied()));
            let t = rename_frame(&self.ts.trans, &map).expect("frame maps are total and injective");
            self.inputs.push(inputs);
            self.states.push(next);
            self.trans.push(t);
        }
    }

    /// `S_j`.
    pub fn state_vars(&mut self, j: usize) -> &[Var] {
        if j > 0 {
            self.ensure(j - 1);
        }
        &self.states[j]
    }

    /// `X_j`.
    pub fn input_vars(&mut self, j: usize) -> &[Var] {
        self.ensure(j);
        &self.inputs[j]
    }

    /// `T_j = T(S_j, X_j, S_{j+1})`.
    pub fn unroll(&mut self, j: usize) -> &CnfFormula {
        self.ensure(j);
        &self.trans[j]
    }

    /// `T_0 ∧ … ∧ T_{i-1}`.
    pub fn transitions(&mut self, i: usize) -> CnfFormula {
        let mut f = CnfFormula::new();
        for j in 0..i {
            f.extend(self.unroll(j));
        }
        f
    }

    /// Renames a formula over the base state variables into frame `j`.
    pub fn to_frame(&mut self, f: &CnfFormula, j: usize) -> Result<CnfFormula> {
        let map: HashMap<Var, Var> = self
            .ts
            .state_vars
            .clone()
            .into_iter()
            .zip(self.state_vars(j).iter().copied())
            .collect();
        rename_frame(f, &map)
    }

    /// Renames a formula over `S_j` back to the base state variables.
    pub fn from_frame(&mut self, f: &CnfFormula, j: usize) -> Result<CnfFormula> {
        let frame = self.state_vars(j).to_vec();
        let map: HashMap<Var, Var> = frame.into_iter().zip(self.ts.state_vars.iter().copied()).collect();
        rename_frame(f, &map)
    }

    /// Property cone over `S_j` and its bad-state literal; `P_j` is the cone
    /// with `¬bad`, `¬P_j` the cone with `bad`.
    pub fn property_at(&mut self, j: usize) -> (&CnfFormula, Lit) {
        self.state_vars(j);
        while self.props.len() <= j {
            let f = self.props.len();
            let aux = self.ts.prop_aux.clone();
            let fresh = self.fresh_like(&aux, VarRole::Auxiliary, f as u32);
            let mut map: HashMap<Var, Var> = aux.iter().copied().zip(fresh).collect();
            map.extend(self.ts.state_vars.iter().copied().zip(self.states[f].iter().copied()));
            let cone = rename_frame(&self.ts.prop_cone, &map).expect("frame maps are total and injective");
            let bad = map[&self.ts.bad_lit.var()].lit(self.ts.bad_lit.polarity());
            self.props.push((cone, bad));
        }
        let (cone, bad) = &self.props[j];
        (cone, *bad)
    }

    /// `init ∧ T_0 ∧ … ∧ T_{i-1}`: every state satisfying it projected to
    /// `S_i` is reachable from `init` in exactly `i` transitions.
    pub fn reach_prefix(&mut self, init: &CnfFormula, i: usize) -> CnfFormula {
        init.clone().and(&self.transitions(i))
    }

    /// `I ∧ H_0 ∧ T_0 ∧ … ∧ H_{i-1} ∧ T_{i-1}` where `H_0` is over `S_0 ∪ X_0`
    /// and each later `H_m` is already over `S_m`.
    pub fn build_phi(&mut self, i: usize, h: &[CnfFormula]) -> Result<CnfFormula> {
        if h.len() != i {
            return Err(Error::Precondition(format!(
                "expected {i} range reduction formulas, got {}",
                h.len()
            )));
        }
        let mut phi = self.ts.init.clone();
        for (m, hm) in h.iter().enumerate() {
            let mut allowed: BTreeSet<Var> = self.state_vars(m).iter().copied().collect();
            if m == 0 {
                allowed.extend(self.input_vars(0).iter().copied());
            }
            if let Some(v) = hm.vars().into_iter().find(|v| !allowed.contains(v)) {
                return Err(Error::Precondition(format!("H_{m} mentions {v} outside its frame")));
            }
            phi.extend(hm);
            phi.extend(self.unroll(m));
        }
        Ok(phi)
    }

    pub fn info(&self, v: Var) -> Option<&VarInfo> {
        self.pool.info(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Clause;
    use crate::model::counter::{abstract_counter, CounterSpec, Encoding};
    use crate::oracle::projection;
    use std::collections::BTreeSet;

    fn counter(k: u32, d: u64) -> TransitionSystem {
        abstract_counter(&CounterSpec::new(k, d, Encoding::Standard).unwrap()).unwrap()
    }

    #[test]
    fn frame_zero_is_t() {
        let ts = counter(2, 2);
        let mut u = Unrolling::new(&ts);
        assert_eq!(u.unroll(0), &ts.trans);
        assert_eq!(u.state_vars(1), ts.next_vars.as_slice());
    }

    #[test]
    fn frames_are_disjoint_and_chained() {
        let ts = counter(3, 2);
        let mut u = Unrolling::new(&ts);
        let t1 = u.unroll(1).vars();
        let t3 = u.unroll(3).vars();
        assert!(t1.is_disjoint(&t3));
        let s2: BTreeSet<Var> = u.state_vars(2).iter().copied().collect();
        assert!(s2.is_subset(&t1));
        assert!(s2.is_subset(&u.unroll(2).vars()));
        let v = u.state_vars(2)[0];
        assert_eq!(u.info(v).unwrap().frame, Some(2));
    }

    #[test]
    fn two_steps_match_simulation() {
        let ts = counter(2, 2);
        let mut u = Unrolling::new(&ts);
        let f = u.transitions(2);
        let mut vars: Vec<Var> = u.state_vars(0).to_vec();
        vars.extend(u.input_vars(0).to_vec());
        vars.extend(u.input_vars(1).to_vec());
        vars.extend(u.state_vars(2).to_vec());
        let got = projection(&f, &vars);
        let mut want = BTreeSet::new();
        for s in 0..4u32 {
            for x in 0..4u32 {
                let s0 = vec![s & 1 == 1, s & 2 == 2];
                let (x0, x1) = (x & 1 == 1, x & 2 == 2);
                let s2 = ts.step(&ts.step(&s0, &[x0]), &[x1]);
                want.insert([s0.clone(), vec![x0, x1], s2].concat());
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn property_frames() {
        let ts = counter(2, 2);
        let mut u = Unrolling::new(&ts);
        let s = u.state_vars(2).to_vec();
        let (cone, bad) = u.property_at(2);
        let mut f = cone.clone();
        f.push(Clause::unit(bad));
        let bad_states = projection(&f, &s);
        assert_eq!(bad_states, BTreeSet::from([vec![false, true], vec![true, true]]));
    }

    #[test]
    fn phi_base_cases() {
        let ts = counter(2, 2);
        let mut u = Unrolling::new(&ts);
        assert_eq!(u.build_phi(0, &[]).unwrap(), ts.init);
        let x0 = u.input_vars(0)[0];
        let c = CnfFormula::from_clauses([Clause::unit(x0.neg())]);
        let phi1 = u.build_phi(1, std::slice::from_ref(&c)).unwrap();
        assert_eq!(phi1, ts.init.clone().and(&c).and(&ts.trans));
        assert!(u.build_phi(2, std::slice::from_ref(&c)).is_err());
        let wrong = CnfFormula::from_clauses([Clause::unit(u.state_vars(2)[0].pos())]);
        assert!(u.build_phi(2, &[c, wrong]).is_err());
    }
}
