//! Finger-search dictionaries over 64-bit integer keys.
//!
//! A finger is a handle to a stored key; searching from a finger for a
//! target costs work that depends on the rank distance `d` between the two
//! keys rather than on the total size of the set. This crate provides:
//!
//! * [`nested`]: a leaf-oriented, level-linked nested balanced distributed
//!   tree (BDT) supporting appends and removals at the tail, with the
//!   block-selecting finger search over its nested copies.
//! * [`bucket`]: the two-level tail dictionary. Contiguous buckets of
//!   `Θ(log log n)` keys with their first keys stored in the nested forest,
//!   incremental insertion of representatives and global rebuilding.
//! * [`randomized`]: a general-position dictionary whose buckets of
//!   `Θ(log² log n)` keys are kept balanced by a randomized zeroing
//!   strategy, over a level-linked top tree.
//! * [`pebble`]: a simulator for the oblivious zeroing pebble game that
//!   strategy relies on.
//! * [`oracle`]: a sorted-array dictionary with galloping finger search, used
//!   as ground truth and as a comparison-model baseline.
//! * [`predecessor`]: the probe-counted predecessor indexes used inside
//!   every tree node.
//! * [`bench`]: workload generation, lockstep differential runs and CSV
//!   reports.
//!
//! Every search reports the number of probes it made (key comparisons and
//! routing-array reads). Probes are the cost measure used throughout.

pub mod bench;
pub mod bucket;
mod error;
pub mod nested;
pub mod oracle;
pub mod pebble;
pub mod predecessor;
pub mod randomized;

pub use error::{Error, Result};

/// Word-RAM key. Every structure in this crate stores distinct keys.
pub type Key = u64;

/// Result of a search: where the target lives and what it cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Found<H> {
    pub handle: H,
    pub probes: u64,
}
