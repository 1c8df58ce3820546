use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fingerset::bench::{
    emit_csv, emit_pebble_csv, format_ops, generate_workload, parse_ops, run_ops, run_ops_on, subject_for, BenchError,
    DistanceDist, Mix, OpKind, ProbeReport, Structure, WorkloadSpec,
};
use fingerset::pebble::{monte_carlo, AdversaryKind, DecreaserMode};

/// Finger-search dictionaries: benchmarks, differential checks and the
/// pebble-game simulator.
#[derive(Parser)]
#[command(name = "fingerset", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a generated workload and report probe counts.
    Bench {
        #[command(flatten)]
        workload: WorkloadArgs,
        /// Also write the generated ops in replay format.
        #[arg(long)]
        write_ops: Option<PathBuf>,
    },
    /// Check a structure against the oracle, op by op.
    Diff {
        #[command(flatten)]
        workload: WorkloadArgs,
        /// Replay this ops file from an empty structure instead of generating.
        #[arg(long)]
        ops_file: Option<PathBuf>,
    },
    /// Monte-Carlo runs of the oblivious pebble game.
    Pebble {
        #[arg(long, default_value_t = 1 << 16)]
        n: usize,
        /// Pebbles per increaser move.
        #[arg(long, default_value_t = 4)]
        c: u64,
        /// Rounds per game; defaults to n.
        #[arg(long)]
        rounds: Option<u64>,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// concentrate, round_robin, random_spread, revisit or all.
        #[arg(long, default_value = "all")]
        adversary: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a workload, then check the structure's invariants.
    Validate {
        #[command(flatten)]
        workload: WorkloadArgs,
    },
}

#[derive(Args)]
struct WorkloadArgs {
    #[arg(long, default_value = "randomized", value_parser = parse::<Structure>)]
    structure: Structure,
    /// Keys stored before the first op.
    #[arg(long, default_value_t = 1 << 16)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    ops: usize,
    /// insert,delete,search proportions.
    #[arg(long, default_value = "0.2,0.2,0.6", value_parser = parse::<Mix>)]
    mix: Mix,
    /// uniform, geometric:P or fixed:D.
    #[arg(long, default_value = "uniform", value_parser = parse::<DistanceDist>)]
    dist: DistanceDist,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl WorkloadArgs {
    fn spec(&self) -> WorkloadSpec {
        WorkloadSpec {
            structure: self.structure,
            n: self.n,
            mix: self.mix,
            dist: self.dist,
            seed: self.seed,
            ops: self.ops,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Both,
    Alternate,
}

fn parse<T: std::str::FromStr<Err = BenchError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: BenchError| e.to_string())
}

fn summarize(report: &ProbeReport) {
    for kind in [OpKind::Append, OpKind::Insert, OpKind::Delete, OpKind::Search] {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.op_kind == kind).collect();
        if rows.is_empty() {
            continue;
        }
        let probes: u64 = rows.iter().map(|r| r.probes).sum();
        let nanos: u64 = rows.iter().map(|r| r.wall_nanos).sum();
        let unit = if kind == OpKind::Search { "probes" } else { "work" };
        println!(
            "{kind:>7}: {:>8} ops, mean {unit} {:.2}, mean {:.0} ns",
            rows.len(),
            probes as f64 / rows.len() as f64,
            nanos as f64 / rows.len() as f64
        );
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Bench { workload, write_ops } => {
            let spec = workload.spec();
            let w = generate_workload(&spec)?;
            if let Some(path) = write_ops {
                fs::write(path, format_ops(&w.ops))?;
            }
            let report = run_ops(spec.structure, &w.initial, &w.ops, spec.seed)?;
            summarize(&report);
            if let Some(path) = &workload.csv {
                emit_csv(&report, path)?;
            }
        }
        Command::Diff { workload, ops_file } => {
            let (initial, ops) = match ops_file {
                Some(path) => (Vec::new(), parse_ops(&fs::read_to_string(path)?)?),
                None => {
                    let w = generate_workload(&workload.spec())?;
                    (w.initial, w.ops)
                }
            };
            match run_ops(workload.structure, &initial, &ops, workload.seed) {
                Ok(report) => {
                    println!("{}: {} ops agree with the oracle", workload.structure, ops.len());
                    if let Some(path) = &workload.csv {
                        emit_csv(&report, path)?;
                    }
                }
                Err(BenchError::DivergenceDetected { op_index, seed, detail, prefix }) => {
                    eprintln!("divergence at op {op_index} (seed {seed}): {detail}");
                    eprintln!("# shortest diverging sequence found, {} ops:", prefix.len());
                    io::stderr().write_all(format_ops(&prefix).as_bytes())?;
                    return Err(BenchError::DivergenceDetected { op_index, seed, detail, prefix });
                }
                Err(e) => return Err(e),
            }
        }
        Command::Pebble { n, c, rounds, seeds, seed, adversary, mode, csv } => {
            if n == 0 || c == 0 {
                return Err(BenchError::InvalidSpec("n and c must be positive".into()));
            }
            let adversaries = match adversary.as_str() {
                "all" => AdversaryKind::ALL.to_vec(),
                name => vec![AdversaryKind::parse(name)
                    .ok_or_else(|| BenchError::InvalidSpec(format!("unknown adversary {name:?}")))?],
            };
            let mode = match mode {
                ModeArg::Both => DecreaserMode::Both,
                ModeArg::Alternate => DecreaserMode::Alternate,
            };
            let runs = monte_carlo(n, rounds.unwrap_or(n as u64), c, &adversaries, seed..seed + seeds, mode);
            for a in &adversaries {
                let mut ms: Vec<u64> = runs.iter().filter(|r| r.adversary == *a).map(|r| r.max_seen).collect();
                ms.sort_unstable();
                let p99 = ms[(ms.len() * 99).div_ceil(100).saturating_sub(1)];
                println!("{:>13}: max M {}, p99 M {p99}", a.name(), ms.last().unwrap());
            }
            if let Some(path) = csv {
                emit_pebble_csv(&runs, path)?;
            }
        }
        Command::Validate { workload } => {
            let spec = workload.spec();
            let w = generate_workload(&spec)?;
            let mut subject = subject_for(spec.structure, spec.seed)(&w.initial)
                .map_err(|e| BenchError::InvalidSpec(e.to_string()))?;
            let report = run_ops_on(&mut *subject, &w.initial, &w.ops, spec.seed)?;
            if let Some(path) = &workload.csv {
                emit_csv(&report, path)?;
            }
            match subject.validate() {
                Ok(()) => println!("{}: {} keys, invariants hold", spec.structure, subject.len()),
                Err(why) => {
                    return Err(BenchError::DivergenceDetected {
                        op_index: w.ops.len().saturating_sub(1),
                        seed: spec.seed,
                        detail: format!("invariant violated: {why}"),
                        prefix: w.ops,
                    })
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
