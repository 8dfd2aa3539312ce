mod common;

use memhier::loopnest::{analyze, enumerate_unrollings, input_trace, weight_trace, LayerSpec, Network};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn traces_match_nested_loops((layer, u) in common::tiny_layer()) {
        for weights in [true, false] {
            let trace = if weights { weight_trace(&layer, &u) } else { input_trace(&layer, &u) }.unwrap();
            let (addresses, per_step) = common::brute_force_trace(&layer, &u, weights);
            prop_assert_eq!(trace.addresses(), &addresses[..]);
            prop_assert_eq!(trace.words_per_step(), per_step);
        }
    }

    #[test]
    fn every_weight_is_touched((layer, u) in common::tiny_layer()) {
        let a = analyze(&weight_trace(&layer, &u).unwrap(), layer.word_width);
        prop_assert_eq!(a.unique_addresses, layer.weight_count());
        prop_assert_eq!(a.required_port_width, a.words_per_step * layer.word_width as u64);
    }
}

#[test]
fn enumerated_unrollings_use_all_elements() {
    let layer = LayerSpec::conv(16, 8, 10, 3);
    let all = enumerate_unrollings(&layer, 8);
    assert!(!all.is_empty());
    assert!(all.iter().all(|u| u.product() == 8 && u.validate(&layer).is_ok()));
    let mut sorted = all.clone();
    sorted.sort();
    assert_eq!(sorted, all);
}

#[test]
fn bundled_network_weight_counts() {
    let net = Network::load(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/tc_resnet.json")).unwrap();
    let counts: Vec<u64> = net.layers.iter().map(|l| l.weight_count()).collect();
    assert_eq!(counts, [1920, 3456, 384, 5184, 6912, 768, 9216, 512, 196, 13824, 1536, 20736, 768]);
}
