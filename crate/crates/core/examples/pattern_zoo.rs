//! Generates one trace per pattern kind, prints its statistics and what the
//! classifier recovers from it.
//!
//!     cargo run --example pattern_zoo

use memhier::pattern::{classify_trace, gen_trace, trace_stats, Classification, PatternSpec};

fn main() {
    let zoo = [
        ("sequential", PatternSpec::sequential(100)),
        ("cyclic", PatternSpec::cyclic(0, 6)),
        ("shifted cyclic", PatternSpec::shifted_cyclic(0, 6, 2, 0)),
        ("shifted cyclic, skip 1", PatternSpec::shifted_cyclic(0, 6, 2, 1)),
        ("strided", PatternSpec::strided(0, 4)),
        ("pseudo-random", PatternSpec::pseudo_random(0, 64, 7)),
        (
            "parallel",
            PatternSpec::parallel(vec![
                PatternSpec::shifted_cyclic(0, 3, 1, 0),
                PatternSpec::shifted_cyclic(1000, 2, 1, 0),
            ]),
        ),
    ];
    for (name, spec) in zoo {
        let trace = gen_trace(&spec, 24).expect("valid spec");
        let stats = trace_stats(&trace);
        let head: Vec<String> = trace.addresses().iter().take(14).map(u64::to_string).collect();
        println!("{name}");
        println!("  trace     {} ...", head.join(" "));
        println!(
            "  unique {:>3}   reuse {:.2}   working set {}",
            stats.unique_addresses, stats.reuse_rate, stats.max_working_set
        );
        match classify_trace(&trace).expect("scalar trace") {
            Classification::Pattern(p) => println!(
                "  classified {:?} base {} l {} s {} skip {} stride {}",
                p.kind, p.base_address, p.cycle_length, p.inter_cycle_shift, p.skip_shift, p.stride
            ),
            Classification::Unclassified => println!("  unclassified"),
        }
    }
}
