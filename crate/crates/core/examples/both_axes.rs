//! Prints both sweep curves plus ground-truth false-alarm totals.
//!
//! ```text
//! cargo run --release --example both_axes -- sim.num_runs=20 change.kind=shape-regenerate
//! ```

use sigdrift::config::parse_assignment;
use sigdrift::sim::{sweep, SimConfig, SweepAxis};

fn main() -> Result<(), sigdrift::Error> {
    let overrides = std::env::args()
        .skip(1)
        .map(|a| parse_assignment(&a))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = SimConfig::load(None, &overrides)?;
    for axis in [SweepAxis::SimilarityThreshold, SweepAxis::AnomalyFraction] {
        let report = sweep(&cfg, axis)?;
        let false_alarms: u32 = report.runs.iter().map(|r| r.false_alarms).sum();
        let tests: u32 = report.runs.iter().map(|r| r.tests).sum();
        println!("# {} axis", axis.as_str());
        print!("{}", report.to_csv());
        println!("# false alarms {false_alarms} over {tests} condition checks\n");
    }
    Ok(())
}
