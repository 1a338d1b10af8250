use thiserror::Error;

use crate::cnf::CnfFormula;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tautological clause on variable {0}")]
    Tautology(u32),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("cyclic circuit through variable {0}")]
    CyclicCircuit(u32),
    #[error("renaming maps two variables onto {0}")]
    NonInjectiveRename(u32),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("initial states violate the property (I -> P does not hold)")]
    InitViolatesProperty,
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("instance exceeds oracle scale: {0}")]
    ScaleGuard(String),
    #[error("resource budget exhausted in {phase}: {reason}")]
    ResourceOut { phase: String, reason: String },
    /// PQE ran out of budget. `partial` is not a valid solution.
    #[error("partial quantifier elimination incomplete: {reason}")]
    PqeIncomplete {
        partial: Box<CnfFormula>,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_resource_out(&self) -> bool {
        matches!(self, Error::ResourceOut { .. } | Error::PqeIncomplete { .. })
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
