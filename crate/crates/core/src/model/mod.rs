//! Transition systems: AIGER models, the abstract counter, and time-frame
//! unrolling.

pub mod aiger;
pub mod counter;
pub mod system;
pub mod unroll;

pub use aiger::{parse_aiger, write_aiger, Aig, AigBuilder, LatchReset};
pub use counter::{abstract_counter, counter_aig, CounterSpec, Encoding};
pub use system::TransitionSystem;
pub use unroll::Unrolling;
