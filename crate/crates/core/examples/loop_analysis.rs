//! Access patterns of the bundled TC-ResNet layers on 64 processing elements.
//! For each layer the unrolling used by `memhier analyze` is shown, then the
//! closest weight (w) or input (i) cycle length over every unrolling of at
//! most 64 elements is compared with reference per-layer cycle lengths.
//!
//!     cargo run --release --example loop_analysis

use std::path::Path;

use memhier::cli::best_unrolling;
use memhier::loopnest::{analyze, common_unrollings, enumerate_unrollings, input_trace, weight_trace, Network};

const REFERENCE_CYCLE_LENGTHS: [u64; 13] = [98, 45, 49, 41, 20, 24, 16, 24, 1, 8, 12, 4, 1];
const PE: u64 = 64;

fn main() {
    let net = Network::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/tc_resnet.json")).unwrap();
    println!("unrollings shared by all layers on {PE} PEs: {}", common_unrollings(&net.layers, PE).len());
    println!(
        "{:>5} {:>5} {:>16} {:>7} {:>6} {:>6} {:>9} {:>6} {:>20}",
        "layer", "type", "unrolling", "unique", "cycle", "port", "inputs", "ref", "closest"
    );
    for (i, layer) in net.layers.iter().enumerate() {
        let u = best_unrolling(layer, PE);
        let w = analyze(&weight_trace(layer, &u).unwrap(), layer.word_width);
        let x = analyze(&input_trace(layer, &u).unwrap(), layer.word_width);
        let reference = REFERENCE_CYCLE_LENGTHS[i];
        let closest = (1..=PE)
            .flat_map(|p| enumerate_unrollings(layer, p))
            .flat_map(|c| {
                let w = analyze(&weight_trace(layer, &c).unwrap(), layer.word_width);
                let x = analyze(&input_trace(layer, &c).unwrap(), layer.word_width);
                [(w.cycle_length, "w", c), (x.cycle_length, "i", c)]
            })
            .min_by_key(|(l, _, _)| l.abs_diff(reference));
        let closest = closest.map_or("-".to_string(), |(l, d, c)| format!("{l} {d} {c}"));
        println!(
            "{i:>5} {:>5} {:>16} {:>7} {:>6} {:>6} {:>9} {reference:>6} {closest:>20}",
            format!("{:?}", layer.layer_type),
            u.to_string(),
            w.unique_addresses,
            w.cycle_length,
            w.required_port_width,
            if x.pattern.pattern().is_some() { "pattern" } else { "nested" },
        );
    }
}
