#![allow(dead_code)]

use std::collections::BTreeMap;

use memhier::loopnest::{enumerate_unrollings, LayerSpec, Unrolling};
use memhier::sim::{
    validate_config, ClockRatio, Event, EventKind, HierarchyConfig, LevelConfig, OsrConfig, Ports, RuntimeInputs,
};
use proptest::prelude::*;

/// A valid configuration with a runtime and an output count.
#[derive(Debug, Clone)]
pub struct Case {
    pub config: HierarchyConfig,
    pub runtime: RuntimeInputs,
    pub outputs: usize,
    pub preload: u64,
}

fn level() -> impl Strategy<Value = (u64, u32, bool)> {
    (2u64..48, 1u32..=2, any::<bool>())
}

fn osr(width: u32) -> impl Strategy<Value = Option<OsrConfig>> {
    let shifts = prop::sample::subsequence(vec![4u32, 8, 16, 24, 32, 64, 128], 1..4);
    prop_oneof![
        1 => Just(None),
        2 => (1u32..=3, prop::sample::select(vec![8u32, 16, 32, 64]), shifts).prop_map(
            move |(mult, out, shifts)| {
                let register_width = width * mult;
                Some(OsrConfig {
                    register_width,
                    output_width: out.min(register_width),
                    available_shifts: shifts.into_iter().filter(|&s| s <= register_width).collect(),
                })
            }
        ),
    ]
}

fn config() -> impl Strategy<Value = HierarchyConfig> {
    let widths = prop::sample::select(vec![(8u32, 8u32), (8, 32), (16, 32), (32, 32), (32, 64), (32, 128), (64, 128)]);
    let ratios = prop::sample::select(vec![(4u32, 1u32), (1, 1), (3, 2), (1, 3), (8, 1)]);
    (widths, prop::collection::vec(level(), 1..=3), ratios, 1u32..=3)
        .prop_flat_map(|((off_w, w), levels, (e, i), latency)| {
            (osr(w), Just((off_w, w, levels, e, i, latency)))
        })
        .prop_map(|(osr, (off_w, w, levels, external, internal, latency))| {
            let n = levels.len();
            let levels = levels
                .into_iter()
                .enumerate()
                .map(|(k, (depth, banks, dual))| {
                    let ports = if dual || k + 1 == n { Ports::Dual } else { Ports::Single };
                    LevelConfig::new(w, depth, ports).with_banks(banks)
                })
                .collect();
            let mut cfg = HierarchyConfig::new(off_w, levels);
            cfg.osr = osr;
            cfg.clock_ratio = ClockRatio { external, internal };
            cfg.offchip_latency = latency;
            cfg
        })
        .prop_filter("valid configuration", |c| validate_config(c).is_empty())
}

fn runtime(levels: usize, shifts: usize) -> impl Strategy<Value = RuntimeInputs> {
    let per_level = (1u64..=72, 0.0f64..=1.0, 0u64..=2, any::<bool>()).prop_map(|(l, frac, skip, whole)| {
        // bias toward the interesting ends of the shift range
        let s = if whole { if frac < 0.5 { 0 } else { l } } else { (l as f64 * frac) as u64 };
        (l, s, skip)
    });
    (prop::collection::vec(per_level, levels), 0u64..5000, 1..=shifts.max(1) as u32).prop_map(
        move |(p, start, sel)| {
            let mut rt = RuntimeInputs::uniform(levels, 1, 0, 0).with_start(start);
            for (k, (l, s, skip)) in p.into_iter().enumerate() {
                rt.cycle_length[k] = l;
                rt.inter_cycle_shift[k] = s;
                rt.skip_shift[k] = skip;
            }
            rt.with_shift_select(if shifts == 0 { 0 } else { sel })
        },
    )
}

pub fn case(max_outputs: usize) -> impl Strategy<Value = Case> {
    config().prop_flat_map(move |config| {
        let shifts = config.osr.as_ref().map_or(0, |o| o.available_shifts.len());
        (
            runtime(config.levels.len(), shifts),
            1..=max_outputs,
            prop_oneof![3 => Just(0u64), 1 => 0u64..400],
            Just(config),
        )
            .prop_map(|(runtime, outputs, preload, config)| Case {
                config,
                runtime,
                outputs,
                preload,
            })
    })
}

/// Structural rule breaks found in an event log, checked independently of
/// the simulator's own monitor.
pub fn structural_violations(config: &HierarchyConfig, events: &[Event]) -> Vec<String> {
    let mut out = Vec::new();
    let n = config.levels.len();
    // (cycle, slots written, slots read) per level
    let mut per_cycle: Vec<BTreeMap<u64, (Vec<u64>, Vec<u64>)>> = vec![BTreeMap::new(); n];
    for e in events {
        let Some(k) = e.level else { continue };
        let entry = per_cycle[k].entry(e.cycle).or_default();
        match e.kind {
            EventKind::Write => entry.0.push(e.address),
            EventKind::Read => entry.1.push(e.address),
            _ => {}
        }
    }
    // a read must return what an earlier cycle wrote into that slot
    let mut stored: Vec<BTreeMap<u64, (u64, Option<memhier::Word>)>> = vec![BTreeMap::new(); n];
    for e in events {
        let Some(k) = e.level else { continue };
        match e.kind {
            EventKind::Write => {
                stored[k].insert(e.address, (e.cycle, e.value.clone()));
            }
            EventKind::Read => match stored[k].get(&e.address) {
                Some((c, v)) if *c < e.cycle && *v == e.value => {}
                _ => out.push(format!("level {k} cycle {}: read of slot {} not backed by a write", e.cycle, e.address)),
            },
            _ => {}
        }
    }
    for (k, cycles) in per_cycle.iter().enumerate() {
        let lv = &config.levels[k];
        let banks = lv.banks as u64;
        let mut last_write: Option<u64> = None;
        for (&cycle, (writes, reads)) in cycles {
            if writes.len() > 1 || reads.len() > 1 {
                out.push(format!("level {k} cycle {cycle}: {} writes, {} reads", writes.len(), reads.len()));
            }
            if let (Some(&w), Some(&r)) = (writes.first(), reads.first()) {
                match lv.ports {
                    Ports::Dual if w == r => out.push(format!("level {k} cycle {cycle}: read and write slot {w}")),
                    Ports::Single if w % banks == r % banks => {
                        out.push(format!("level {k} cycle {cycle}: read and write share bank {}", w % banks))
                    }
                    _ => {}
                }
            }
            if !writes.is_empty() {
                if lv.ports == Ports::Single && last_write == Some(cycle.wrapping_sub(1)) {
                    out.push(format!("level {k} cycle {cycle}: consecutive writes"));
                }
                last_write = Some(cycle);
            }
        }
    }
    out
}

/// Per-step distinct addresses of a layer, straight from twelve nested loops.
pub fn brute_force_trace(layer: &LayerSpec, u: &Unrolling, weights: bool) -> (Vec<u64>, usize) {
    let (kg, cg) = (layer.k / layer.g, layer.c / layer.g);
    let xo = (layer.x - layer.f) / layer.stride + 1;
    let mut out = Vec::new();
    let mut per_step = None;
    for n0 in (0..layer.n).step_by(u.n as usize) {
        for g0 in (0..layer.g).step_by(u.g as usize) {
            for x0 in (0..xo).step_by(u.x as usize) {
                for k0 in (0..kg).step_by(u.k as usize) {
                    for c0 in (0..cg).step_by(u.c as usize) {
                        for f0 in (0..layer.f).step_by(u.f as usize) {
                            let mut step: Vec<u64> = Vec::new();
                            for n in n0..n0 + u.n {
                                for g in g0..g0 + u.g {
                                    for k in k0..k0 + u.k {
                                        for c in c0..c0 + u.c {
                                            for x in x0..x0 + u.x {
                                                for f in f0..f0 + u.f {
                                                    let a = if weights {
                                                        (g * kg + k) * cg * layer.f + c * layer.f + f
                                                    } else {
                                                        n * layer.c * layer.x + (g * cg + c) * layer.x + x * layer.stride + f
                                                    };
                                                    if !step.contains(&a) {
                                                        step.push(a);
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                            per_step.get_or_insert(step.len());
                            out.extend(step);
                        }
                    }
                }
            }
        }
    }
    (out, per_step.unwrap_or(1))
}

/// A small valid layer with one of its unrollings.
pub fn tiny_layer() -> impl Strategy<Value = (LayerSpec, Unrolling)> {
    (1u64..=2, 1u64..=2, 1u64..=4, 1u64..=4, 1u64..=3, 0u64..=4, 1u64..=2, any::<bool>())
        .prop_map(|(n, g, kg, cg, f, extra, stride, fc)| {
            let mut layer = if fc {
                LayerSpec::fc(kg * g, cg * g)
            } else {
                LayerSpec::conv(kg * g, cg * g, f + extra, f)
            };
            layer.n = n;
            layer.g = g;
            layer.stride = if fc { 1 } else { stride };
            layer
        })
        .prop_flat_map(|layer| {
            let all: Vec<Unrolling> = (1..=16).flat_map(|p| enumerate_unrollings(&layer, p)).collect();
            (Just(layer), prop::sample::select(all))
        })
}
