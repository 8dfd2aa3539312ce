//! Total cycles for 5000 outputs while the cycle length grows past the
//! capacity of the last level, with and without preloading.
//!
//!     cargo run --release --example capacity_cliff

use std::collections::BTreeMap;
use std::path::Path;

use memhier::cost::DEFAULT_CLOCK_HZ;
use memhier::experiment::{run_sweep, ExperimentSpec};

fn main() {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/capacity_sweep.experiment");
    let (spec, base) = ExperimentSpec::load(&file).unwrap();
    let points = spec.points(&base).unwrap();
    let rows = run_sweep(&points, None, DEFAULT_CLOCK_HZ).unwrap();

    let mut table: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut labels: Vec<String> = Vec::new();
    for r in &rows {
        if !labels.contains(&r.curve) {
            labels.push(r.curve.clone());
        }
        table.entry(r.value).or_default().push(r.total_cycles);
    }
    print!("{:>6}", "l");
    for l in &labels {
        print!(" {:>10}", l.trim_start_matches("l1_depth_").replace("_no_preload", "").replace("_preload", "+pre"));
    }
    println!();
    for (value, cycles) in table {
        print!("{value:>6}");
        for c in cycles {
            print!(" {c:>10}");
        }
        println!();
    }
}
