//! Runs a batch of pseudo-random hierarchies and patterns through the
//! simulator and the reference model and counts disagreements.
//!
//!     cargo run --release --example differential_check [-- CASES]

use memhier::refmodel::expected_outputs;
use memhier::sim::{init_sim, validate_config, HierarchyConfig, LevelConfig, Ports, RuntimeInputs, Stop};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

fn main() {
    let cases: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200);
    let strategy = (
        proptest::collection::vec((2u64..64, proptest::bool::ANY), 1..=3),
        1u64..=80,
        0u64..=80,
        0u64..=2,
        1usize..=1500,
    );
    let mut runner = TestRunner::deterministic();
    let (mut checked, mut mismatched, mut outputs) = (0, 0, 0);
    while checked < cases {
        let (levels, l, s, skip, n) = strategy.new_tree(&mut runner).unwrap().current();
        let count = levels.len();
        let levels = levels
            .into_iter()
            .enumerate()
            .map(|(k, (d, dual))| LevelConfig::new(32, d, if dual || k + 1 == count { Ports::Dual } else { Ports::Single }))
            .collect();
        let cfg = HierarchyConfig::new(32, levels);
        let rt = RuntimeInputs::uniform(count, l, s.min(l), skip);
        if !validate_config(&cfg).is_empty() {
            continue;
        }
        let mut sim = init_sim(&cfg, &rt).unwrap();
        sim.set_event_logging(false);
        let report = sim.run(Stop::Outputs(n)).unwrap();
        let expected = expected_outputs(&cfg, &rt, n).unwrap();
        checked += 1;
        outputs += n;
        if report.outputs != expected.outputs || !report.violations.is_empty() {
            mismatched += 1;
            println!("mismatch: {cfg:?} {rt:?}");
        }
    }
    println!("{checked} cases, {outputs} outputs compared, {mismatched} mismatches");
}
