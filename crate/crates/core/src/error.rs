use thiserror::Error;

use crate::Key;

/// Errors raised by the dictionaries, indexes and simulators in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("key {key} is not greater than the current maximum {max}")]
    KeyNotGreaterThanMax { key: Key, max: Key },
    #[error("structure is empty")]
    EmptyStructure,
    #[error("key {0} is not stored")]
    KeyAbsent(Key),
    #[error("key {0} is already stored")]
    DuplicateKey(Key),
    #[error("target {target} lies beyond the last routing key {last}")]
    TargetBeyondArray { target: Key, last: Key },
    #[error("input keys are not strictly increasing at position {position}")]
    NotSorted { position: usize },
    #[error("finger handle is stale or belongs to another structure")]
    StaleFinger,
    #[error("key {key} does not fit after the finger key {finger}")]
    KeyOutOfFingerRange { finger: Key, key: Key },
    #[error("increaser move spends {spent} pebbles, budget is {budget}")]
    BudgetMismatch { spent: u64, budget: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
