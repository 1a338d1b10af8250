//! Bounded safety checking by computing range reduction.
//!
//! Given a transition system, a safety property and a bound `n`, the
//! checker either finds a counterexample of length at most `n` or shows the
//! property holds for `n` transitions. Range reduction formulas, computed by
//! partial quantifier elimination, describe which states stop being
//! reachable when the initial time frame is constrained by a clause.

pub mod bench;
pub mod cli;
pub mod cnf;
pub mod crr;
pub mod dimacs;
pub mod error;
pub mod model;
pub mod oracle;
pub mod pqe;
pub mod sat;

pub use error::{Error, Result};
