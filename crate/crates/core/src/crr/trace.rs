use serde_json::{json, Value};

use crate::cnf::{Clause, Lit};
use crate::model::TransitionSystem;

/// A complete assignment to the state and input variables of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputPair {
    pub state: Vec<bool>,
    pub input: Vec<bool>,
}

impl InputPair {
    pub fn lits(&self, ts: &TransitionSystem) -> Vec<Lit> {
        ts.state_vars
            .iter()
            .zip(&self.state)
            .chain(ts.input_vars.iter().zip(&self.input))
            .map(|(v, &b)| v.lit(b))
            .collect()
    }

    /// The longest clause this pair falsifies.
    pub fn falsified_clause(&self, ts: &TransitionSystem) -> Clause {
        Clause::blocking(&self.lits(ts)).expect("a pair assigns each variable once")
    }
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// A sequence of input pairs, each leading to the state of the next.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub pairs: Vec<InputPair>,
}

impl Trace {
    pub fn new(pairs: Vec<InputPair>) -> Trace {
        Trace { pairs }
    }

    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The state reached by the last pair.
    pub fn final_state(&self, ts: &TransitionSystem) -> Option<Vec<bool>> {
        self.pairs.last().map(|p| ts.step(&p.state, &p.input))
    }

    /// Cuts the trace right after the first transition into a bad state.
    pub fn truncate_at_first_bad(&mut self, ts: &TransitionSystem) {
        for i in 0..self.pairs.len() {
            let p = &self.pairs[i];
            if ts.is_bad(&ts.step(&p.state, &p.input)) {
                self.pairs.truncate(i + 1);
                return;
            }
        }
    }

    /// Replays the trace by simulation and checks that it is a
    /// counterexample: it starts in an initial state, every pair leads to
    /// the next pair's state, every visited state but the last is good, and
    /// the last is bad.
    pub fn check_counterexample(&self, ts: &TransitionSystem) -> Result<(), String> {
        let first = self.pairs.first().ok_or("empty trace")?;
        if !ts.is_initial(&first.state) {
            return Err("first state is not initial".into());
        }
        for (i, p) in self.pairs.iter().enumerate() {
            if p.state.len() != ts.num_latches() || p.input.len() != ts.num_inputs() {
                return Err(format!("frame {i} has the wrong width"));
            }
            if ts.is_bad(&p.state) {
                return Err(format!("state at frame {i} is already bad"));
            }
            let next = ts.step(&p.state, &p.input);
            match self.pairs.get(i + 1) {
                Some(q) if q.state != next => return Err(format!("frame {} does not follow frame {i}", i + 1)),
                Some(_) => {}
                None if !ts.is_bad(&next) => return Err("final state is good".into()),
                None => {}
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.pairs
                .iter()
                .map(|p| json!({"state": bits_to_string(&p.state), "input": bits_to_string(&p.input)}))
                .collect(),
        )
    }

    /// Input stimulus: one line of input bits per frame.
    pub fn to_stimulus(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&bits_to_string(&p.input));
            out.push('\n');
        }
        out
    }
}
