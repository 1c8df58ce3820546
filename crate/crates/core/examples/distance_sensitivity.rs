//! Mean probes against rank distance for the three structures, the shape
//! the CSV reports are meant to plot.

use fingerset::bench::{run_workload, DistanceDist, Mix, Structure, WorkloadSpec};

fn main() -> Result<(), fingerset::bench::BenchError> {
    println!("{:>8} {:>12} {:>12} {:>12}", "d", "nested-bdt", "randomized", "oracle");
    for e in [0u32, 2, 4, 6, 8, 10, 12, 14] {
        let d = 1usize << e;
        let mut line = format!("{d:>8}");
        for structure in Structure::ALL {
            let spec = WorkloadSpec {
                structure,
                n: 1 << 16,
                mix: Mix::searches_only(),
                dist: DistanceDist::Fixed(d),
                seed: e as u64,
                ops: 2_000,
            };
            let report = run_workload(&spec)?;
            line += &format!(" {:>12.2}", report.mean_probes_at(d).unwrap());
        }
        println!("{line}");
    }
    Ok(())
}
