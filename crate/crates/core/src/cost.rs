//! Area and power estimation from a table of memory macro costs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{HierarchyConfig, Ports, SimReport};

/// Clock of the accelerator domain used when none is given, in Hz.
pub const DEFAULT_CLOCK_HZ: f64 = 250_000.0;

/// Cost of one memory macro (one bank).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroCostEntry {
    pub word_width: u32,
    pub ram_depth: u64,
    pub ports: Ports,
    /// µm²
    pub area: f64,
    /// mW
    pub leakage_power: f64,
    /// nJ per access
    pub read_energy: f64,
    /// nJ per access
    pub write_energy: f64,
}

/// Per-bit costs of the output shift register.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegisterCost {
    /// µm² per bit
    pub area_per_bit: f64,
    /// mW per bit
    pub leakage_per_bit: f64,
    /// nJ per bit loaded or shifted
    pub energy_per_bit: f64,
}

impl Default for RegisterCost {
    fn default() -> Self {
        Self {
            area_per_bit: 10.0,
            leakage_per_bit: 3.25969e-6,
            energy_per_bit: 1.44963e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    entries: Vec<MacroCostEntry>,
    pub register: RegisterCost,
}

const DEFAULT_TABLE: &str = include_str!("../assets/default_cost_table.json");

impl CostTable {
    pub fn new(entries: Vec<MacroCostEntry>, register: RegisterCost) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            let field = format!("entries[{i}]");
            let values = [e.area, e.leakage_power, e.read_energy, e.write_energy];
            if e.word_width == 0 || e.ram_depth == 0 || values.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::validation(field, "all costs and dimensions must be positive"));
            }
            if e.ports == Ports::Dual {
                let single = entries.iter().find(|s| {
                    s.ports == Ports::Single && s.word_width == e.word_width && s.ram_depth == e.ram_depth
                });
                if let Some(s) = single {
                    if e.area <= s.area || e.leakage_power <= s.leakage_power {
                        return Err(Error::validation(
                            field,
                            "a dual-ported macro must cost more area and leakage than its single-ported twin",
                        ));
                    }
                }
            }
        }
        Ok(Self { entries, register })
    }

    /// The bundled table.
    pub fn default_table() -> Self {
        Self::from_json(DEFAULT_TABLE, "default cost table").expect("bundled cost table is valid")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let entries: Vec<MacroCostEntry> = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Self::new(entries, RegisterCost::default())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn entries(&self) -> &[MacroCostEntry] {
        &self.entries
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("entries serialize")
    }
}

/// Cost of a `width` x `depth` macro. Depths between two table entries of
/// the same width and port count are interpolated geometrically.
pub fn macro_cost(width: u32, depth: u64, ports: Ports, table: &CostTable) -> Result<MacroCostEntry> {
    let unsupported = || Error::UnsupportedMacro {
        width,
        depth,
        ports: ports.to_string(),
    };
    let mut same: Vec<&MacroCostEntry> = table
        .entries
        .iter()
        .filter(|e| e.word_width == width && e.ports == ports)
        .collect();
    if same.is_empty() {
        return Err(unsupported());
    }
    same.sort_by_key(|e| e.ram_depth);
    if let Some(e) = same.iter().find(|e| e.ram_depth == depth) {
        return Ok((*e).clone());
    }
    let upper = same
        .iter()
        .position(|e| e.ram_depth > depth)
        .filter(|&i| i > 0)
        .ok_or_else(unsupported)?;
    let (lo, hi) = (same[upper - 1], same[upper]);
    let t = (depth as f64 / lo.ram_depth as f64).ln() / (hi.ram_depth as f64 / lo.ram_depth as f64).ln();
    let geo = |a: f64, b: f64| a.powf(1.0 - t) * b.powf(t);
    Ok(MacroCostEntry {
        word_width: width,
        ram_depth: depth,
        ports,
        area: geo(lo.area, hi.area),
        leakage_power: geo(lo.leakage_power, hi.leakage_power),
        read_energy: geo(lo.read_energy, hi.read_energy),
        write_energy: geo(lo.write_energy, hi.write_energy),
    })
}

fn level_macros(config: &HierarchyConfig, table: &CostTable) -> Result<Vec<(MacroCostEntry, u32)>> {
    config
        .levels
        .iter()
        .map(|lv| Ok((macro_cost(lv.word_width, lv.ram_depth, lv.ports, table)?, lv.banks)))
        .collect()
}

fn osr_bits(config: &HierarchyConfig) -> f64 {
    config.osr.as_ref().map_or(0.0, |o| o.register_width as f64)
}

/// Total area in µm²: every bank of every level plus the OSR register.
pub fn config_area(config: &HierarchyConfig, table: &CostTable) -> Result<f64> {
    let macros: f64 = level_macros(config, table)?
        .iter()
        .map(|(m, banks)| m.area * *banks as f64)
        .sum();
    Ok(macros + osr_bits(config) * table.register.area_per_bit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    /// µm²
    pub total_area: f64,
    /// mW
    pub static_power: f64,
    /// nJ
    pub dynamic_energy: f64,
    /// mW
    pub average_power: f64,
    pub level_area: Vec<f64>,
    pub clock_hz: f64,
}

/// Static power, dynamic energy and average power of a simulated run.
///
/// Reads and writes are charged per bank access; the OSR is charged per bit
/// loaded or shifted.
pub fn run_power(
    config: &HierarchyConfig,
    report: &SimReport,
    table: &CostTable,
    clock_hz: f64,
) -> Result<CostReport> {
    if report.total_internal_cycles == 0 || !(clock_hz > 0.0) {
        return Err(Error::UndefinedAverage);
    }
    let macros = level_macros(config, table)?;
    let bits = osr_bits(config);
    let static_power = macros
        .iter()
        .map(|(m, banks)| m.leakage_power * *banks as f64)
        .sum::<f64>()
        + bits * table.register.leakage_per_bit;

    let mut dynamic_energy: f64 = macros
        .iter()
        .enumerate()
        .map(|(k, (m, _))| {
            let reads = report.level_reads.get(k).copied().unwrap_or(0) as f64;
            let writes = report.level_writes.get(k).copied().unwrap_or(0) as f64;
            reads * m.read_energy + writes * m.write_energy
        })
        .sum();
    if let Some(last) = config.levels.last().filter(|_| config.osr.is_some()) {
        let moved = report.osr_shifted_bits as f64 + report.osr_loads as f64 * last.word_width as f64;
        dynamic_energy += moved * table.register.energy_per_bit;
    }

    let seconds = report.total_internal_cycles as f64 / clock_hz;
    // nJ/s is 1e-6 mW
    let average_power = static_power + dynamic_energy * 1e-6 / seconds;
    Ok(CostReport {
        total_area: config_area(config, table)?,
        static_power,
        dynamic_energy,
        average_power,
        level_area: macros.iter().map(|(m, b)| m.area * *b as f64).collect(),
        clock_hz,
    })
}
