//! Per-level macro costs and the power of a simulated run.
//!
//!     cargo run --release --example cost_report [-- CONFIG RUNTIME]

use std::path::{Path, PathBuf};

use memhier::cost::{macro_cost, run_power, CostTable, DEFAULT_CLOCK_HZ};
use memhier::experiment::read_json;
use memhier::sim::{init_sim, HierarchyConfig, RuntimeInputs, Stop};

fn main() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/configs");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let cfg_path = args.next().unwrap_or_else(|| configs.join("narrow_32bit.json"));
    let rt_path = args.next().unwrap_or_else(|| configs.join("cyclic_8.json"));
    let cfg: HierarchyConfig = read_json(&cfg_path).unwrap();
    let rt: RuntimeInputs = read_json(&rt_path).unwrap();
    let table = CostTable::default_table();

    println!("{:<6} {:>6} {:>6} {:>7} {:>6} {:>10} {:>12} {:>10}", "level", "width", "depth", "ports", "banks", "area um2", "leakage mW", "read nJ");
    for (k, lv) in cfg.levels.iter().enumerate() {
        let m = macro_cost(lv.word_width, lv.ram_depth, lv.ports, &table).unwrap();
        println!(
            "{k:<6} {:>6} {:>6} {:>7} {:>6} {:>10.1} {:>12.3e} {:>10.4}",
            lv.word_width, lv.ram_depth, lv.ports.to_string(), lv.banks, m.area, m.leakage_power, m.read_energy
        );
    }

    let mut sim = init_sim(&cfg, &rt).unwrap();
    sim.set_event_logging(false);
    let report = sim.run(Stop::Outputs(5000)).unwrap();
    let cost = run_power(&cfg, &report, &table, DEFAULT_CLOCK_HZ).unwrap();
    println!("total area      {:.1} um2", cost.total_area);
    println!("cycles          {}", report.total_internal_cycles);
    println!("static power    {:.4} mW", cost.static_power);
    println!("dynamic energy  {:.2} nJ", cost.dynamic_energy);
    println!("average power   {:.4} mW at {} kHz", cost.average_power, cost.clock_hz / 1e3);
}
