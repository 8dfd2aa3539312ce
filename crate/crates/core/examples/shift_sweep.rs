//! Raises the inter-cycle shift from 1 to the cycle length on a single- and
//! a dual-ported level 0 and reports where throughput leaves its optimum.
//!
//!     cargo run --release --example shift_sweep

use std::collections::BTreeMap;
use std::path::Path;

use memhier::cost::DEFAULT_CLOCK_HZ;
use memhier::experiment::{run_sweep, ExperimentSpec, Row};

fn main() {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/shift_sweep.experiment");
    let (spec, base) = ExperimentSpec::load(&file).unwrap();
    let points = spec.points(&base).unwrap();
    let mut curves: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for r in run_sweep(&points, None, DEFAULT_CLOCK_HZ).unwrap() {
        curves.entry(r.curve.clone()).or_default().push(r);
    }
    println!("{:<22} {:>8} {:>14} {:>12}", "curve", "optimum", "within 5% to", "at s = l");
    for (label, rows) in &curves {
        let best = rows.iter().map(|r| r.total_cycles).min().unwrap();
        let edge = rows
            .iter()
            .take_while(|r| r.total_cycles as f64 <= best as f64 * 1.05)
            .last()
            .map_or(0, |r| r.value);
        let last = rows.last().unwrap();
        println!("{label:<22} {best:>8} {:>14} {:>12}", format!("s = {edge}"), last.total_cycles);
    }
}
