//! A weight memory built as one small dual-ported 128-bit level plus a
//! 384-bit output shift register, compared with three large single-ported
//! macros holding all weights.
//!
//!     cargo run --release --example weight_memory

use std::path::Path;

use memhier::cost::{config_area, macro_cost, run_power, CostTable, DEFAULT_CLOCK_HZ};
use memhier::experiment::read_json;
use memhier::refmodel::expected_outputs;
use memhier::sim::{init_sim, HierarchyConfig, Ports, RuntimeInputs, Stop};

fn main() {
    let cfg: HierarchyConfig =
        read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/configs/weights_single_level.json")).unwrap();
    let table = CostTable::default_table();

    let flat = 3.0 * macro_cost(128, 1024, Ports::Single, &table).unwrap().area;
    let hier = config_area(&cfg, &table).unwrap();
    println!("3 x 128x1024 single-ported  {flat:>9.0} um2");
    println!("128x64 dual-ported + OSR    {hier:>9.0} um2  ({:.1}% smaller)", (1.0 - hier / flat) * 100.0);

    // the OSR fills from empty in three reads of the 128-bit level
    let rt = RuntimeInputs::uniform(1, 64, 64, 0).with_shift_select(2);
    let mut sim = init_sim(&cfg, &rt.clone().with_shift_select(0)).unwrap();
    let mut reads = 0;
    while sim.osr_fill() != Some(384) {
        reads += sim.step().reads[0] as u32;
    }
    println!("OSR full after {reads} level reads, cycle {}", sim.internal_cycle());

    // 64-bit outputs of a sequential weight stream, checked against the reference model
    let mut sim = init_sim(&cfg, &rt).unwrap();
    sim.set_event_logging(false);
    let report = sim.run(Stop::Outputs(4000)).unwrap();
    let expected = expected_outputs(&cfg, &rt, 4000).unwrap();
    let power = run_power(&cfg, &report, &table, DEFAULT_CLOCK_HZ).unwrap();
    println!(
        "4000 outputs in {} cycles, matches reference: {}, {:.4} mW",
        report.total_internal_cycles,
        report.outputs == expected.outputs,
        power.average_power
    );
}
