//! Workload generation, lockstep differential runs against the oracle and
//! CSV reports.

mod csv;
mod opsfile;
mod runner;
mod workload;

pub use csv::{emit_csv, emit_pebble_csv, write_csv, write_pebble_csv, OpKind, ProbeReport, ProbeRow};
pub use opsfile::{format_ops, parse_ops};
pub use runner::{
    run_ops, run_ops_on, run_ops_with, run_workload, subject_for, Factory, OracleSubject, RandomizedSubject, Subject, TailSubject,
};
pub use workload::{generate_workload, DistanceDist, Mix, Op, Structure, Workload, WorkloadSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid workload: {0}")]
    InvalidSpec(String),
    #[error("divergence at op {op_index} (seed {seed}): {detail}; minimized prefix has {} ops", prefix.len())]
    DivergenceDetected {
        op_index: usize,
        seed: u64,
        detail: String,
        /// A shortened op sequence that still diverges from the initial keys.
        prefix: Vec<Op>,
    },
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

impl BenchError {
    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::DivergenceDetected { .. } => 1,
            BenchError::InvalidSpec(_) | BenchError::IoFailure(_) => 2,
        }
    }
}
