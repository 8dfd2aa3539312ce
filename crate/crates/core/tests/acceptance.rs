//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use memhier::cost::{config_area, macro_cost, run_power, CostTable, DEFAULT_CLOCK_HZ};
use memhier::experiment::{read_json, run_sweep, ExperimentSpec, Row};
use memhier::loopnest::{analyze, weight_trace, LayerType, Network};
use memhier::pattern::{classify_trace, gen_trace, Classification, PatternSpec};
use memhier::refmodel::expected_outputs;
use memhier::sim::{init_sim, HierarchyConfig, Ports, RuntimeInputs, SimReport, Stop};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const OUTPUTS: usize = 5000;
const FLAT_TOL: f64 = 0.05;
const CLIFF_TOL: f64 = 0.10;
const PRELOAD_GAIN: f64 = 0.21;
const PRELOAD_GAIN_TOL: f64 = 0.03;
const WIDE_TOL: f64 = 0.05;
/// Narrow curve beyond its knee: at least twice the flat band, less the cliff tolerance.
const NARROW_MIN_RATIO: f64 = 2.0 * (1.0 - CLIFF_TOL);
const SHIFT_TOL: f64 = 0.05;
const ASYMPTOTIC_CPO: f64 = 3.0;
const ASYMPTOTIC_TOL: f64 = 1e-3;
const AREA_NARROW: f64 = 7566.0;
const AREA_WIDE: f64 = 15202.0;
const AREA_EXACT_TOL: f64 = 1e-6;
const POWER_WIDE_MW: f64 = 0.31;
const POWER_TOL: f64 = 0.05;
const ENERGY_RATIO: f64 = 2.5;
const ENERGY_RATIO_TOL: f64 = 0.15;
const DUAL_RATIO: f64 = 2.30;
const DUAL_RATIO_TOL: f64 = 0.1;
const RANDOM_CASES: u32 = 1000;
const MAX_RANDOM_OUTPUTS: usize = 2000;
const ROUND_TRIP_CASES: u32 = 1000;
const OSR_FILL_READS: u64 = 3;
const CASE_STUDY_AREA_REDUCTION: f64 = 0.55;
const CASE_STUDY_CASES: u32 = 300;
const REFERENCE_UNIQUE_WEIGHTS: [u64; 13] = [1920, 3456, 384, 5184, 6912, 768, 9216, 512, 196, 13824, 1536, 20736, 768];
const ORACLE_LAYERS: u32 = 500;

type Outcome = Result<String, String>;

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn config(name: &str) -> HierarchyConfig {
    read_json(&assets().join("configs").join(name)).expect("bundled config")
}

fn sweep(file: &str) -> BTreeMap<String, Vec<Row>> {
    let (spec, base) = ExperimentSpec::load(assets().join(file)).expect("bundled experiment");
    let points = spec.points(&base).expect("valid experiment");
    let mut curves: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    for row in run_sweep(&points, None, DEFAULT_CLOCK_HZ).expect("sweep runs") {
        curves.entry(row.curve.clone()).or_default().push(row);
    }
    curves
}

fn simulate(cfg: &HierarchyConfig, rt: &RuntimeInputs, outputs: usize) -> SimReport {
    let mut sim = init_sim(cfg, rt).expect("valid run");
    sim.set_event_logging(false);
    sim.run(Stop::Outputs(outputs)).expect("run completes")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

fn capacity_cliff(cliff: &BTreeMap<String, Vec<Row>>) -> Outcome {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for depth in [32u64, 128, 512] {
        let rows = &cliff[&format!("l1_depth_{depth}_no_preload")];
        let min = rows.iter().filter(|r| r.value <= depth).map(|r| r.total_cycles).min().unwrap() as f64;
        let mut worst_flat = 0.0f64;
        let mut worst_cliff = 0.0f64;
        for r in rows {
            let t = r.total_cycles as f64;
            if r.value <= depth {
                let dev = t / min - 1.0;
                worst_flat = worst_flat.max(dev);
                if dev > FLAT_TOL {
                    failures.push(format!("depth {depth} l={} is {:.1}% above the flat band", r.value, dev * 100.0));
                }
            } else {
                let dev = rel(t, 2.0 * min);
                worst_cliff = worst_cliff.max(dev);
                if dev > CLIFF_TOL {
                    failures.push(format!("depth {depth} l={} is {:.2}x the flat band", r.value, t / min));
                }
            }
        }
        notes.push(format!(
            "depth {depth}: flat min {min}, worst flat +{:.1}%, worst cliff {:.1}%",
            worst_flat * 100.0,
            worst_cliff * 100.0
        ));
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(format!("{}; {}", failures.join("; "), notes.join("; ")))
    }
}

fn preload_gain(cliff: &BTreeMap<String, Vec<Row>>) -> Outcome {
    let plain = &cliff["l1_depth_512_no_preload"];
    let pre = &cliff["l1_depth_512_preload"];
    let mut notes = Vec::new();
    let mut ok = true;
    for (a, b) in plain.iter().zip(pre).filter(|(a, _)| a.value > 512) {
        let gain = 1.0 - b.total_cycles as f64 / a.total_cycles as f64;
        ok &= (gain - PRELOAD_GAIN).abs() <= PRELOAD_GAIN_TOL;
        notes.push(format!("l={}: {} -> {} cycles, {:.1}% fewer", a.value, a.total_cycles, b.total_cycles, gain * 100.0));
    }
    let text = notes.join("; ");
    if ok { Ok(text) } else { Err(text) }
}

fn wide_word_immunity() -> Outcome {
    let widths = sweep("word_width.experiment");
    let mut failures = Vec::new();
    let mut worst_wide = 0.0f64;
    for label in ["wide_128bit_no_preload", "wide_128bit_preload"] {
        for r in &widths[label] {
            let dev = rel(r.total_cycles as f64, OUTPUTS as f64);
            worst_wide = worst_wide.max(dev);
            if dev > WIDE_TOL {
                failures.push(format!("{label} l={} takes {}", r.value, r.total_cycles));
            }
        }
    }
    let narrow = &widths["narrow_32bit_no_preload"];
    let min = narrow.iter().filter(|r| r.value <= 128).map(|r| r.total_cycles).min().unwrap() as f64;
    let mut ratios = Vec::new();
    for r in narrow {
        let ratio = r.total_cycles as f64 / min;
        if r.value <= 128 && ratio - 1.0 > FLAT_TOL {
            failures.push(format!("narrow l={} already {:.2}x", r.value, ratio));
        }
        if r.value > 128 {
            ratios.push(format!("{}:{:.2}x", r.value, ratio));
            if ratio < NARROW_MIN_RATIO {
                failures.push(format!("narrow l={} only {:.2}x", r.value, ratio));
            }
        }
    }
    let text = format!("wide within {:.2}% of {OUTPUTS}; narrow beyond 128: {}", worst_wide * 100.0, ratios.join(" "));
    if failures.is_empty() { Ok(text) } else { Err(format!("{}; {text}", failures.join("; "))) }
}

fn shift_degradation() -> Outcome {
    let shifts = sweep("shift_sweep.experiment");
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for l in [16u64, 32, 64, 96] {
        let mut thresholds = [0u64; 2];
        let mut worst = [0f64; 2];
        for (i, variant) in ["single", "dual"].iter().enumerate() {
            let rows = &shifts[&format!("l0_{variant}_cycle_{l}")];
            let opt = rows.iter().map(|r| r.total_cycles).min().unwrap() as f64;
            let within = |r: &Row| r.total_cycles as f64 <= opt * (1.0 + SHIFT_TOL);
            for r in rows.iter().filter(|r| r.value <= l / 3) {
                if !within(r) {
                    failures.push(format!("{variant} l={l} s={} is {:.1}% off optimum", r.value, (r.total_cycles as f64 / opt - 1.0) * 100.0));
                }
            }
            thresholds[i] = rows.iter().take_while(|r| within(r)).last().map_or(0, |r| r.value);

            let cfg = config(&format!("shift_l0_{variant}.json"));
            let rt = RuntimeInputs::uniform(2, l, l, 0);
            let a = simulate(&cfg, &rt, OUTPUTS).total_internal_cycles;
            let b = simulate(&cfg, &rt, 2 * OUTPUTS).total_internal_cycles;
            worst[i] = (b - a) as f64 / OUTPUTS as f64;
            if (worst[i] - ASYMPTOTIC_CPO).abs() > ASYMPTOTIC_TOL {
                failures.push(format!("{variant} l={l} s=l settles at {:.4} cycles per output", worst[i]));
            }
        }
        if thresholds[1] <= thresholds[0] {
            failures.push(format!("l={l}: dual threshold {} not above single {}", thresholds[1], thresholds[0]));
        }
        if worst[0] != worst[1] {
            failures.push(format!("l={l}: worst cases differ ({} vs {})", worst[0], worst[1]));
        }
        notes.push(format!("l={l}: optimum up to s={} single, s={} dual", thresholds[0], thresholds[1]));
    }
    let text = notes.join("; ");
    if failures.is_empty() { Ok(text) } else { Err(format!("{}; {text}", failures.join("; "))) }
}

fn cost_anchors() -> Outcome {
    let table = CostTable::default_table();
    let wide = config("wide_128bit.json");
    let narrow = config("narrow_32bit.json");
    let single = config("shift_l0_single.json");
    let dual = config("shift_l0_dual.json");
    let r_wide = simulate(&wide, &RuntimeInputs::uniform(2, 32, 0, 0).with_shift_select(1), OUTPUTS);
    let r_narrow = simulate(&narrow, &RuntimeInputs::uniform(2, 128, 0, 0), OUTPUTS);
    let shift = RuntimeInputs::uniform(2, 32, 8, 0);
    let r_single = simulate(&single, &shift, OUTPUTS);
    let r_dual = simulate(&dual, &shift, OUTPUTS);
    let power = |cfg: &HierarchyConfig, r: &SimReport| run_power(cfg, r, &table, DEFAULT_CLOCK_HZ).unwrap();

    let a_narrow = config_area(&narrow, &table).unwrap();
    let a_wide = config_area(&wide, &table).unwrap();
    let p_wide = power(&wide, &r_wide);
    let energy = p_wide.dynamic_energy / power(&narrow, &r_narrow).dynamic_energy;
    let dual_ratio = power(&dual, &r_dual).average_power / power(&single, &r_single).average_power;
    let ok = (a_narrow - AREA_NARROW).abs() < AREA_EXACT_TOL
        && (a_wide - AREA_WIDE).abs() < AREA_EXACT_TOL
        && rel(p_wide.average_power, POWER_WIDE_MW) <= POWER_TOL
        && (energy - ENERGY_RATIO).abs() <= ENERGY_RATIO_TOL
        && (dual_ratio - DUAL_RATIO).abs() <= DUAL_RATIO_TOL;
    let text = format!(
        "areas {a_narrow:.2} / {a_wide:.2} um2, wide power {:.4} mW, energy ratio {energy:.3}, dual/single power {dual_ratio:.3}",
        p_wide.average_power
    );
    if ok { Ok(text) } else { Err(text) }
}

struct RandomChecks {
    cases: u32,
    mismatches: Vec<String>,
    violations: Vec<String>,
}

/// Simulates random cases with full event logging and checks data and structure.
fn random_corpus(strategy: impl Strategy<Value = common::Case>, cases: u32) -> RandomChecks {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let mut out = RandomChecks {
        cases: 0,
        mismatches: Vec::new(),
        violations: Vec::new(),
    };
    let cell = std::cell::RefCell::new(&mut out);
    let _ = runner.run(&strategy, |case| {
        let mut sim = init_sim(&case.config, &case.runtime).map_err(|e| TestCaseError::fail(e.to_string()))?;
        sim.preload(case.preload);
        let report = sim.run(Stop::Outputs(case.outputs)).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let expected = expected_outputs(&case.config, &case.runtime, case.outputs).unwrap();
        let mut o = cell.borrow_mut();
        o.cases += 1;
        if report.outputs != expected.outputs {
            o.mismatches.push(format!("{case:?}"));
        }
        o.violations.extend(report.violations.iter().cloned());
        o.violations.extend(common::structural_violations(&case.config, sim.events()));
        Ok(())
    });
    out
}

fn differential(corpus: &RandomChecks) -> Outcome {
    let text = format!("{} cases, {} mismatches", corpus.cases, corpus.mismatches.len());
    if corpus.cases >= RANDOM_CASES && corpus.mismatches.is_empty() {
        Ok(text)
    } else {
        Err(format!("{text}; first: {:?}", corpus.mismatches.first()))
    }
}

fn invariants(corpus: &RandomChecks) -> Outcome {
    let text = format!("{} cases, {} violations", corpus.cases, corpus.violations.len());
    if corpus.cases >= RANDOM_CASES && corpus.violations.is_empty() {
        Ok(text)
    } else {
        Err(format!("{text}; first: {:?}", corpus.violations.first()))
    }
}

fn canonical_spec() -> impl Strategy<Value = PatternSpec> {
    prop_oneof![
        (0u64..10_000).prop_map(PatternSpec::sequential),
        (0u64..10_000, 1u64..=64).prop_map(|(b, l)| PatternSpec::cyclic(b, l)),
        (0u64..10_000, 2u64..=64, 0.0f64..1.0, 0u64..=3).prop_map(|(b, l, f, skip)| {
            let s = 1 + ((l - 1) as f64 * f) as u64;
            PatternSpec::shifted_cyclic(b, l, s, skip)
        }),
        (0u64..10_000, 2u64..=64).prop_map(|(b, s)| PatternSpec::strided(b, s)),
    ]
    .prop_map(|s| s.canonical())
}

fn round_trip() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: ROUND_TRIP_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    let count = std::cell::Cell::new(0u32);
    let result = runner.run(&canonical_spec(), |spec| {
        count.set(count.get() + 1);
        let n = ((spec.skip_shift + 3) * spec.cycle_length).max(4) as usize;
        let trace = gen_trace(&spec, n).unwrap();
        let back = classify_trace(&trace).unwrap();
        prop_assert_eq!(back, Classification::Pattern(spec));
        Ok(())
    });
    match result {
        Ok(()) => Ok(format!("{} specs recovered", count.get())),
        Err(e) => Err(e.to_string()),
    }
}

fn osr_fill() -> Outcome {
    let cfg = config("weights_single_level.json");
    let osr_bits = cfg.osr.as_ref().unwrap().register_width as usize;
    let rt = RuntimeInputs::uniform(1, 64, 64, 0);
    let mut sim = init_sim(&cfg, &rt).unwrap();
    let mut reads = 0u64;
    let mut cycles = 0u64;
    while sim.osr_fill() != Some(osr_bits) && cycles < 10_000 {
        let ev = sim.step();
        reads += ev.reads.last().copied().unwrap_or(false) as u64;
        cycles += 1;
    }
    let text = format!(
        "{osr_bits}-bit OSR over {}-bit words full after {reads} reads",
        cfg.levels[0].word_width
    );
    if sim.osr_fill() == Some(osr_bits) && reads == OSR_FILL_READS {
        Ok(text)
    } else {
        Err(text)
    }
}

fn case_study_config() -> impl Strategy<Value = common::Case> {
    let cfg = config("weights_single_level.json");
    (1u64..=72, 0.0f64..=1.0, 0u64..=2, 0u64..5000, 1u32..=2, 1..=MAX_RANDOM_OUTPUTS, 0u64..200).prop_map(
        move |(l, f, skip, start, sel, outputs, preload)| common::Case {
            config: cfg.clone(),
            runtime: RuntimeInputs::uniform(1, l, (l as f64 * f) as u64, skip)
                .with_start(start)
                .with_shift_select(sel),
            outputs,
            preload,
        },
    )
}

fn loop_nest() -> Outcome {
    let net = Network::load(assets().join("tc_resnet.json")).unwrap();
    let mut failures = Vec::new();
    let unique: Vec<u64> = net.layers.iter().map(|l| l.weight_count()).collect();
    let analyzed: Vec<_> = net
        .layers
        .iter()
        .map(|l| analyze(&weight_trace(l, &memhier::cli::best_unrolling(l, 64)).unwrap(), l.word_width))
        .collect();
    let rows: Vec<u64> = analyzed.iter().map(|a| a.unique_addresses).collect();
    if rows != REFERENCE_UNIQUE_WEIGHTS || unique != REFERENCE_UNIQUE_WEIGHTS {
        failures.push(format!("unique addresses {rows:?}"));
    }
    for (l, a) in net.layers.iter().zip(&analyzed) {
        if l.layer_type == LayerType::Fc && a.cycle_length != 1 {
            failures.push(format!("FC layer cycle length {}", a.cycle_length));
        }
    }

    let mut runner = TestRunner::new(Config {
        cases: ORACLE_LAYERS,
        failure_persistence: None,
        ..Config::default()
    });
    let oracle = runner.run(&common::tiny_layer(), |(layer, u)| {
        for weights in [true, false] {
            let trace = if weights {
                weight_trace(&layer, &u)
            } else {
                memhier::loopnest::input_trace(&layer, &u)
            }
            .unwrap();
            let (addresses, per_step) = common::brute_force_trace(&layer, &u, weights);
            prop_assert_eq!(trace.addresses(), &addresses[..]);
            prop_assert_eq!(trace.words_per_step(), per_step);
        }
        Ok(())
    });
    if let Err(e) = oracle {
        failures.push(format!("trace oracle: {e}"));
    }

    let table = CostTable::default_table();
    let wmem = config("weights_single_level.json");
    let flat = 3.0 * macro_cost(128, 1024, Ports::Single, &table).unwrap().area;
    let hier = config_area(&wmem, &table).unwrap();
    let reduction = 1.0 - hier / flat;
    if reduction < CASE_STUDY_AREA_REDUCTION {
        failures.push(format!("area reduction only {:.1}%", reduction * 100.0));
    }
    let corpus = random_corpus(case_study_config(), CASE_STUDY_CASES);
    if !corpus.mismatches.is_empty() || !corpus.violations.is_empty() {
        failures.push(format!(
            "case study: {} mismatches, {} violations",
            corpus.mismatches.len(),
            corpus.violations.len()
        ));
    }
    let text = format!(
        "13 layers match, {ORACLE_LAYERS} tiny layers match the loop oracle, area {hier:.0} vs {flat:.0} um2 ({:.1}% smaller), {} case-study runs clean",
        reduction * 100.0,
        corpus.cases
    );
    if failures.is_empty() { Ok(text) } else { Err(format!("{}; {text}", failures.join("; "))) }
}

fn main() -> ExitCode {
    let cliff = sweep("capacity_sweep.experiment");
    let corpus = random_corpus(common::case(MAX_RANDOM_OUTPUTS), RANDOM_CASES);
    let results: Vec<(&str, Outcome)> = vec![
        ("capacity cliff", capacity_cliff(&cliff)),
        ("preloading gain", preload_gain(&cliff)),
        ("wide-word immunity", wide_word_immunity()),
        ("inter-cycle shift degradation", shift_degradation()),
        ("cost calibration anchors", cost_anchors()),
        ("differential oracle", differential(&corpus)),
        ("structural invariants", invariants(&corpus)),
        ("pattern round trip", round_trip()),
        ("OSR fill", osr_fill()),
        ("loop-nest analysis", loop_nest()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS  {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL  {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
