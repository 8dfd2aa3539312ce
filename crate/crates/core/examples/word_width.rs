//! Two hierarchies of equal capacity: 32-bit words against 128-bit words
//! feeding an output shift register. Cycle lengths count 32-bit words.
//!
//!     cargo run --release --example word_width

use std::path::Path;

use memhier::cost::{CostTable, DEFAULT_CLOCK_HZ};
use memhier::experiment::{run_sweep, ExperimentSpec};

fn main() {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/word_width.experiment");
    let (spec, base) = ExperimentSpec::load(&file).unwrap();
    let points = spec.points(&base).unwrap();
    let table = CostTable::default_table();
    let rows = run_sweep(&points, Some(&table), DEFAULT_CLOCK_HZ).unwrap();
    println!("{:<24} {:>6} {:>8} {:>10} {:>9}", "curve", "l", "cycles", "area um2", "power mW");
    for r in rows {
        println!(
            "{:<24} {:>6} {:>8} {:>10.0} {:>9.4}",
            r.curve,
            r.value,
            r.total_cycles,
            r.area.unwrap(),
            r.power.unwrap()
        );
    }
}
