//! The abstract k-bit counter: a single input `x`; with `x = 0` the counter
//! stays, with `x = 1` it moves to the state of the next value, wrapping
//! from `2^k - 1` back to the initial state. The property is `val(s) < d`.
//!
//! The state encoding is a bijection from values to codes. The standard
//! encoding is the identity; the permuted one shuffles every code except
//! that of value 0, so the initial state is all zeros under both.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::aiger::{Aig, AigBuilder, AigLit, LatchReset};
use super::system::TransitionSystem;

pub const MAX_COUNTER_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    Standard,
    Permuted(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CounterSpec {
    pub k: u32,
    pub d: u64,
    pub encoding: Encoding,
}

impl CounterSpec {
    pub fn new(k: u32, d: u64, encoding: Encoding) -> Result<CounterSpec> {
        let spec = CounterSpec { k, d, encoding };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_COUNTER_BITS {
            return Err(Error::InvalidSpec(format!(
                "counter width must be in 1..={MAX_COUNTER_BITS}, got {}",
                self.k
            )));
        }
        if self.d == 0 || self.d >= self.num_states() {
            return Err(Error::InvalidSpec(format!(
                "threshold must satisfy 0 < d < 2^k = {}, got {}",
                self.num_states(),
                self.d
            )));
        }
        Ok(())
    }

    pub fn num_states(&self) -> u64 {
        1u64 << self.k
    }

    /// `codes[val]` is the state code of value `val`.
    pub fn codes(&self) -> Vec<u64> {
        let mut codes: Vec<u64> = (0..self.num_states()).collect();
        if let Encoding::Permuted(seed) = self.encoding {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            codes[1..].shuffle(&mut rng);
        }
        codes
    }

    /// State bits of value `val`; bit `i` drives latch `i`.
    pub fn state_of_value(&self, val: u64) -> Vec<bool> {
        let code = self.codes()[val as usize];
        (0..self.k).map(|i| code >> i & 1 == 1).collect()
    }

    pub fn value_of_state(&self, state: &[bool]) -> u64 {
        let code = state
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (b as u64) << i);
        self.codes()
            .iter()
            .position(|&c| c == code)
            .expect("encoding is a bijection") as u64
    }
}

impl fmt::Display for CounterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={},d={}", self.k, self.d)?;
        if let Encoding::Permuted(seed) = self.encoding {
            write!(f, ",perm={seed}")?;
        }
        Ok(())
    }
}

/// Parses `k=3,d=2` or `k=3,d=2,perm=7`.
impl FromStr for CounterSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<CounterSpec> {
        let (mut k, mut d, mut encoding) = (None, None, Encoding::Standard);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got `{part}`")))?;
            let bad = || Error::InvalidSpec(format!("bad value for {key}: `{value}`"));
            match key {
                "k" => k = Some(value.parse().map_err(|_| bad())?),
                "d" => d = Some(value.parse().map_err(|_| bad())?),
                "perm" => encoding = Encoding::Permuted(value.parse().map_err(|_| bad())?),
                _ => return Err(Error::InvalidSpec(format!("unknown counter key `{key}`"))),
            }
        }
        let k = k.ok_or_else(|| Error::InvalidSpec("missing k".into()))?;
        let d = d.ok_or_else(|| Error::InvalidSpec("missing d".into()))?;
        CounterSpec::new(k, d, encoding)
    }
}

/// The counter as an AIG: one minterm per state, each next-state bit a mux
/// between holding and the OR of the minterms whose successor sets it.
pub fn counter_aig(spec: &CounterSpec) -> Result<Aig> {
    spec.validate()?;
    let k = spec.k as usize;
    let n = spec.num_states();
    let codes = spec.codes();
    let mut b = AigBuilder::new();
    let x = b.input();
    let latches: Vec<AigLit> = (0..k).map(|_| b.latch(LatchReset::Zero)).collect();

    // minterm[code], built as a prefix tree over the latches
    let mut level: Vec<AigLit> = vec![1];
    for &s in &latches {
        let mut next = Vec::with_capacity(level.len() * 2);
        for bit in [false, true] {
            for &m in &level {
                next.push(b.and(m, if bit { s } else { s ^ 1 }));
            }
        }
        level = next;
    }
    let minterm = level;

    let mut value_of_code = vec![0u64; n as usize];
    for (val, &code) in codes.iter().enumerate() {
        value_of_code[code as usize] = val as u64;
    }
    for (j, &s) in latches.iter().enumerate() {
        let sets: Vec<AigLit> = (0..n)
            .filter(|&code| {
                let succ = codes[((value_of_code[code as usize] + 1) % n) as usize];
                succ >> j & 1 == 1
            })
            .map(|code| minterm[code as usize])
            .collect();
        let f = b.or_all(&sets);
        let next = b.mux(x, f, s);
        b.set_next(s, next);
    }
    let bad: Vec<AigLit> = (spec.d..n).map(|val| minterm[codes[val as usize] as usize]).collect();
    let bad = b.or_all(&bad);
    b.bad(bad);
    b.comment(format!("abstract counter {spec}"));
    Ok(b.finish())
}

pub fn abstract_counter(spec: &CounterSpec) -> Result<TransitionSystem> {
    TransitionSystem::from_aig(&counter_aig(spec)?)
}
