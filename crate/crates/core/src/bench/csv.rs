use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::BenchError;
use crate::pebble::PebbleRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Append,
    Insert,
    Delete,
    Search,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Append => "append",
            OpKind::Insert => "insert",
            OpKind::Delete => "delete",
            OpKind::Search => "search",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measured op. Update rows carry `d = 0` and report work units as
/// probes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRow {
    pub structure: &'static str,
    pub n: usize,
    pub d: usize,
    pub probes: u64,
    pub wall_nanos: u64,
    pub op_kind: OpKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
}

impl ProbeReport {
    pub fn searches(&self) -> impl Iterator<Item = &ProbeRow> {
        self.rows.iter().filter(|r| r.op_kind == OpKind::Search)
    }

    /// Mean probes over searches at rank distance `d`.
    pub fn mean_probes_at(&self, d: usize) -> Option<f64> {
        let (sum, count) = self
            .searches()
            .filter(|r| r.d == d)
            .fold((0u64, 0u64), |(s, c), r| (s + r.probes, c + 1));
        (count > 0).then(|| sum as f64 / count as f64)
    }
}

pub const PROBE_HEADER: &str = "structure,n,d,probes,wall_nanos,op_kind";
pub const PEBBLE_HEADER: &str = "seed,adversary,n,c,rounds,M";

pub fn write_csv(report: &ProbeReport, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{PROBE_HEADER}")?;
    for r in &report.rows {
        writeln!(w, "{},{},{},{},{},{}", r.structure, r.n, r.d, r.probes, r.wall_nanos, r.op_kind)?;
    }
    w.flush()
}

pub fn emit_csv(report: &ProbeReport, path: impl AsRef<Path>) -> Result<(), BenchError> {
    write_csv(report, BufWriter::new(File::create(path)?))?;
    Ok(())
}

pub fn write_pebble_csv(runs: &[PebbleRun], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{PEBBLE_HEADER}")?;
    for r in runs {
        writeln!(w, "{},{},{},{},{},{}", r.seed, r.adversary.name(), r.n, r.c, r.rounds, r.max_seen)?;
    }
    w.flush()
}

pub fn emit_pebble_csv(runs: &[PebbleRun], path: impl AsRef<Path>) -> Result<(), BenchError> {
    write_pebble_csv(runs, BufWriter::new(File::create(path)?))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(d: usize, probes: u64) -> ProbeRow {
        ProbeRow {
            structure: "oracle",
            n: 10,
            d,
            probes,
            wall_nanos: 99,
            op_kind: OpKind::Search,
        }
    }

    #[test]
    fn header_only_for_empty_report() {
        let mut out = Vec::new();
        write_csv(&ProbeReport::default(), &mut out).unwrap();
        assert_eq!(out, b"structure,n,d,probes,wall_nanos,op_kind\n");
    }

    #[test]
    fn one_line_per_row() {
        let report = ProbeReport {
            rows: vec![row(1, 3), row(2, 5), row(1, 4)],
        };
        let mut out = Vec::new();
        write_csv(&report, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().nth(1), Some("oracle,10,1,3,99,search"));
        assert_eq!(report.mean_probes_at(1), Some(3.5));
        assert_eq!(report.mean_probes_at(7), None);
    }
}
