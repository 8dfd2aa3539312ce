//! Regenerates `assets/default_cost_table.json`.
//!
//! Macro costs follow a small parametric model. Area parameters are solved
//! exactly from three area targets; power parameters are solved against the
//! power targets on simulated runs of the bundled configurations.
//!
//!     cargo run --release --example fit_cost_table [-- --write]

use std::path::Path;

use memhier::cost::{config_area, run_power, CostTable, MacroCostEntry, RegisterCost, DEFAULT_CLOCK_HZ};
use memhier::experiment::read_json;
use memhier::sim::{init_sim, HierarchyConfig, Ports, RuntimeInputs, SimReport, Stop};

const WIDTHS: [u32; 5] = [8, 16, 32, 64, 128];
const DEPTHS: [u64; 9] = [16, 32, 64, 128, 256, 512, 1024, 2048, 4096];

const AREA_NARROW: f64 = 7566.0;
const AREA_WIDE: f64 = 15202.0;
/// Small dual-ported 64 x 32 macro against two 64 x 2048 dual-ported banks.
const AREA_SMALL_SHARE: f64 = 0.065;
const POWER_WIDE_MW: f64 = 0.31;
const ENERGY_RATIO: f64 = 2.5;
const DUAL_POWER_RATIO: f64 = 2.30;

const DUAL_AREA_FACTOR: f64 = 1.5;
const DUAL_ENERGY_FACTOR: f64 = 1.5;
const REGISTER_AREA_PER_BIT: f64 = 10.0;
/// nJ per bit accessed in a macro.
const ACCESS_ENERGY_PER_BIT: f64 = 1e-3;
const LEAKAGE_COLUMNS: f64 = 64.0;

#[derive(Debug, Clone, Copy)]
struct Params {
    p: f64,
    q: f64,
    r: f64,
    leak: f64,
    dual_leak: f64,
    register_energy: f64,
}

fn single_area(pr: &Params, w: u32, d: u64) -> f64 {
    pr.p + pr.q * w as f64 * d as f64 + pr.r * w as f64
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn round_sig(x: f64) -> f64 {
    let mag = 10f64.powi(5 - x.abs().log10().floor() as i32);
    (x * mag).round() / mag
}

fn entry(pr: &Params, w: u32, d: u64, ports: Ports) -> MacroCostEntry {
    let dual = ports == Ports::Dual;
    let area = single_area(pr, w, d) * if dual { DUAL_AREA_FACTOR } else { 1.0 };
    let leak = pr.leak * (w as f64 * d as f64 + LEAKAGE_COLUMNS * w as f64) * if dual { pr.dual_leak } else { 1.0 };
    let read = ACCESS_ENERGY_PER_BIT * w as f64 * (1.0 + d as f64 / 1024.0) * if dual { DUAL_ENERGY_FACTOR } else { 1.0 };
    MacroCostEntry {
        word_width: w,
        ram_depth: d,
        ports,
        area: round2(area),
        leakage_power: round_sig(leak),
        read_energy: round_sig(read),
        write_energy: round_sig(read * 1.2),
    }
}

fn table(pr: &Params) -> CostTable {
    let mut entries = Vec::new();
    for &w in &WIDTHS {
        for &d in &DEPTHS {
            for ports in [Ports::Single, Ports::Dual] {
                entries.push(entry(pr, w, d, ports));
            }
        }
    }
    // absorb rounding so the two area targets hold to the cent
    let find = |e: &[MacroCostEntry], w, d, ports| {
        e.iter()
            .position(|x| x.word_width == w && x.ram_depth == d && x.ports == ports)
            .unwrap()
    };
    let s = entries[find(&entries, 32, 512, Ports::Single)].area;
    let i = find(&entries, 32, 128, Ports::Dual);
    entries[i].area = round2(AREA_NARROW - s);
    let s = entries[find(&entries, 128, 128, Ports::Single)].area;
    let i = find(&entries, 128, 32, Ports::Dual);
    entries[i].area = round2(AREA_WIDE - s - 128.0 * REGISTER_AREA_PER_BIT);

    CostTable::new(
        entries,
        RegisterCost {
            area_per_bit: REGISTER_AREA_PER_BIT,
            leakage_per_bit: round_sig(pr.leak),
            energy_per_bit: round_sig(pr.register_energy),
        },
    )
    .unwrap()
}

/// Solves p, q, r from the area targets (all linear in p, q, r).
fn solve_area() -> (f64, f64, f64) {
    // narrow: A_S(32,512) + m A_S(32,128); wide: A_S(128,128) + m A_S(128,32) + OSR
    let m = DUAL_AREA_FACTOR;
    let bits = 32.0 * 512.0 + m * 32.0 * 128.0;
    let r = (AREA_WIDE - 128.0 * REGISTER_AREA_PER_BIT - AREA_NARROW) / ((128.0 + m * 128.0) - (32.0 + m * 32.0));
    // (1+m) p + bits q = AREA_NARROW - (32 + 32 m) r
    let rhs = AREA_NARROW - (32.0 + 32.0 * m) * r;
    // A(64,32) = share * 2 * A(64,2048), the dual factor cancels
    // (1 - 2 share) p + (2048 - 2 share 131072) q + (64 - 2 share 64) r = 0
    let k = 2.0 * AREA_SMALL_SHARE;
    let (a1, b1) = (1.0 + m, bits);
    let (a2, b2, c2) = (1.0 - k, 2048.0 - k * 131072.0, (64.0 - k * 64.0) * r);
    // a1 p + b1 q = rhs ; a2 p + b2 q = -c2
    let det = a1 * b2 - a2 * b1;
    let p = (rhs * b2 - b1 * -c2) / det;
    let q = (a1 * -c2 - a2 * rhs) / det;
    (p, q, r)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn simulate(cfg: &HierarchyConfig, rt: &RuntimeInputs) -> SimReport {
    let mut sim = init_sim(cfg, rt).unwrap();
    sim.set_event_logging(false);
    sim.run(Stop::Outputs(5000)).unwrap()
}

fn load(name: &str) -> HierarchyConfig {
    read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/configs").join(name)).unwrap()
}

fn main() {
    let wide = load("wide_128bit.json");
    let narrow = load("narrow_32bit.json");
    let shift_single = load("shift_l0_single.json");
    let shift_dual = load("shift_l0_dual.json");
    let r_wide = simulate(&wide, &RuntimeInputs::uniform(2, 32, 0, 0).with_shift_select(1));
    let r_narrow = simulate(&narrow, &RuntimeInputs::uniform(2, 128, 0, 0));
    let shift_rt = RuntimeInputs::uniform(2, 32, 8, 0);
    let r_single = simulate(&shift_single, &shift_rt);
    let r_dual = simulate(&shift_dual, &shift_rt);

    let (p, q, r) = solve_area();
    let mut pr = Params {
        p,
        q,
        r,
        leak: 4e-6,
        dual_leak: 3.0,
        register_energy: ACCESS_ENERGY_PER_BIT,
    };
    let power = |pr: &Params, cfg: &HierarchyConfig, rep: &SimReport| {
        run_power(cfg, rep, &table(pr), DEFAULT_CLOCK_HZ).unwrap()
    };

    for _ in 0..20 {
        pr.register_energy = bisect(0.0, 1.0, |e| {
            let t = Params { register_energy: e, ..pr };
            power(&t, &wide, &r_wide).dynamic_energy / power(&t, &narrow, &r_narrow).dynamic_energy - ENERGY_RATIO
        });
        pr.leak = bisect(1e-9, 1e-3, |l| {
            power(&Params { leak: l, ..pr }, &wide, &r_wide).average_power - POWER_WIDE_MW
        });
        pr.dual_leak = bisect(1.01, 20.0, |m| {
            let t = Params { dual_leak: m, ..pr };
            power(&t, &shift_dual, &r_dual).average_power / power(&t, &shift_single, &r_single).average_power
                - DUAL_POWER_RATIO
        });
    }

    let t = table(&pr);
    println!("area model: p={p:.4} q={q:.6} r={r:.4}");
    println!("dual leakage factor {:.4}", pr.dual_leak);
    println!("register: {:?}", t.register);
    println!("narrow area {:.2}", config_area(&narrow, &t).unwrap());
    println!("wide area {:.2}", config_area(&wide, &t).unwrap());
    let pw = power(&pr, &wide, &r_wide);
    let pn = power(&pr, &narrow, &r_narrow);
    println!("wide power {:.4} mW, energy ratio {:.4}", pw.average_power, pw.dynamic_energy / pn.dynamic_energy);
    println!(
        "dual/single L0 power {:.4}",
        power(&pr, &shift_dual, &r_dual).average_power / power(&pr, &shift_single, &r_single).average_power
    );

    if std::env::args().any(|a| a == "--write") {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/default_cost_table.json");
        std::fs::write(&path, t.to_json() + "\n").unwrap();
        println!("wrote {}", path.display());
    }
}
