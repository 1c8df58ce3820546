//! Replays a hand-written ops file against every structure with the oracle
//! in lockstep, then writes the probe report as CSV.

use fingerset::bench::{parse_ops, run_ops, write_csv, BenchError, Structure};

const OPS: &str = "\
# build a small tail, search across it, trim it
A 10
A 20
A 30
A 40
S 10 40
S 40 20
D 40
A 35
S 35 10
";

fn main() -> Result<(), BenchError> {
    let ops = parse_ops(OPS)?;
    for structure in Structure::ALL {
        let report = run_ops(structure, &[], &ops, 0)?;
        println!("{structure}: {} ops agree", report.rows.len());
        if structure == Structure::Randomized {
            write_csv(&report, std::io::stdout())?;
        }
    }
    // General inserts are outside the tail structure's contract.
    let general = parse_ops("A 10\nA 30\nI 10 20\n")?;
    match run_ops(Structure::NestedBdt, &[], &general, 0) {
        Err(e) => println!("nested-bdt refuses it: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
