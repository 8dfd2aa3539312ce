use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Widest level word the simulator stores natively.
pub const MAX_WORD_WIDTH: u32 = 128;
pub const MAX_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ports {
    Single,
    Dual,
}

impl std::fmt::Display for Ports {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ports::Single => "single",
            Ports::Dual => "dual",
        })
    }
}

/// One hierarchy level. Both banks of a dual-banked level use the same macro.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub macro_name: String,
    pub banks: u32,
    pub word_width: u32,
    /// Words per bank.
    pub ram_depth: u64,
    pub ports: Ports,
}

impl LevelConfig {
    pub fn new(word_width: u32, ram_depth: u64, ports: Ports) -> Self {
        Self {
            macro_name: format!("sram_{word_width}x{ram_depth}_{ports}"),
            banks: 1,
            word_width,
            ram_depth,
            ports,
        }
    }

    pub fn with_banks(mut self, banks: u32) -> Self {
        self.banks = banks;
        self
    }

    pub fn capacity(&self) -> u64 {
        self.banks as u64 * self.ram_depth
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OsrConfig {
    pub register_width: u32,
    pub output_width: u32,
    pub available_shifts: Vec<u32>,
}

/// Frequency ratio external:internal, e.g. 4:1 when the off-chip side runs
/// four times faster than the accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockRatio {
    pub external: u32,
    pub internal: u32,
}

impl Default for ClockRatio {
    fn default() -> Self {
        Self {
            external: 4,
            internal: 1,
        }
    }
}

impl ClockRatio {
    /// Periods (internal, external) in ticks of the common tick grid.
    pub fn periods(&self) -> (u64, u64) {
        let g = gcd(self.external as u64, self.internal as u64).max(1);
        (self.external as u64 / g, self.internal as u64 / g)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn default_latency() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    pub offchip_word_width: u32,
    pub offchip_address_width: u32,
    pub levels: Vec<LevelConfig>,
    #[serde(default)]
    pub osr: Option<OsrConfig>,
    #[serde(default)]
    pub clock_ratio: ClockRatio,
    /// In external clock cycles.
    #[serde(default = "default_latency")]
    pub offchip_latency: u32,
}

impl HierarchyConfig {
    pub fn new(offchip_word_width: u32, levels: Vec<LevelConfig>) -> Self {
        Self {
            offchip_word_width,
            offchip_address_width: 32,
            levels,
            osr: None,
            clock_ratio: ClockRatio::default(),
            offchip_latency: 1,
        }
    }

    pub fn with_osr(mut self, osr: OsrConfig) -> Self {
        self.osr = Some(osr);
        self
    }

    pub fn total_capacity(&self) -> u64 {
        self.levels.iter().map(LevelConfig::capacity).sum()
    }

    pub fn last_level(&self) -> Option<&LevelConfig> {
        self.levels.last()
    }
}

/// Lists every violated configuration rule. An empty list means valid.
pub fn validate_config(config: &HierarchyConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    let n = config.levels.len();
    if n == 0 || n > MAX_LEVELS {
        v.push(Violation::new(
            "levels",
            format!("hierarchy depth must range from one to five (got {n})"),
        ));
    }
    if config.offchip_word_width == 0 {
        v.push(Violation::new("offchip_word_width", "must be positive"));
    }
    if config.offchip_address_width == 0 || config.offchip_address_width > 64 {
        v.push(Violation::new(
            "offchip_address_width",
            "must lie in 1..=64 bits",
        ));
    }
    if config.clock_ratio.external == 0 || config.clock_ratio.internal == 0 {
        v.push(Violation::new("clock_ratio", "both sides must be positive"));
    }
    if config.offchip_latency == 0 {
        v.push(Violation::new("offchip_latency", "must be at least one external cycle"));
    }

    for (i, level) in config.levels.iter().enumerate() {
        let path = |f: &str| format!("levels[{i}].{f}");
        if level.macro_name.is_empty() {
            v.push(Violation::new(path("macro_name"), "must not be empty"));
        }
        if !(1..=2).contains(&level.banks) {
            v.push(Violation::new(
                path("banks"),
                format!("a level features one or two banks (got {})", level.banks),
            ));
        }
        if level.word_width == 0 || level.word_width > MAX_WORD_WIDTH {
            v.push(Violation::new(
                path("word_width"),
                format!("must lie in 1..={MAX_WORD_WIDTH} bits"),
            ));
        }
        if level.ram_depth == 0 {
            v.push(Violation::new(path("ram_depth"), "must be positive"));
        }
        if i > 0 {
            let (a, b) = (config.levels[i - 1].word_width, level.word_width);
            if a > 0 && b > 0 && a % b != 0 && b % a != 0 {
                v.push(Violation::new(
                    path("word_width"),
                    format!("must divide or be a multiple of level {}'s width {a}", i - 1),
                ));
            }
        }
    }

    if let Some(first) = config.levels.first() {
        let off = config.offchip_word_width;
        if off > 0 && (off > first.word_width || first.word_width % off != 0) {
            v.push(Violation::new(
                "offchip_word_width",
                format!(
                    "level 0 width {} must be a multiple of the off-chip width {off}",
                    first.word_width
                ),
            ));
        }
    }
    if let Some(last) = config.levels.last() {
        if last.ports != Ports::Dual {
            v.push(Violation::new(
                format!("levels[{}].ports", n - 1),
                "the last level employs a dual-ported memory module",
            ));
        }
        if let Some(osr) = &config.osr {
            validate_osr(osr, last.word_width, &mut v);
        }
    }
    v
}

fn validate_osr(osr: &OsrConfig, last_width: u32, v: &mut Vec<Violation>) {
    let r = osr.register_width;
    if r < last_width {
        v.push(Violation::new(
            "osr.register_width",
            format!("must hold at least one last-level word ({last_width} bits)"),
        ));
    }
    if osr.output_width == 0 || osr.output_width > r {
        v.push(Violation::new(
            "osr.output_width",
            "must lie in 1..=register_width",
        ));
    }
    if osr.available_shifts.is_empty() {
        v.push(Violation::new("osr.available_shifts", "must not be empty"));
    }
    for (i, &shift) in osr.available_shifts.iter().enumerate() {
        if shift == 0 || shift > r {
            v.push(Violation::new(
                format!("osr.available_shifts[{i}]"),
                "must lie in 1..=register_width",
            ));
            continue;
        }
        if r < last_width || osr.output_width == 0 || osr.output_width > r {
            continue;
        }
        // The register fills in steps of gcd(word, shift). It must always have
        // room for another word while it holds too few bits to emit.
        let step = gcd(last_width as u64, shift as u64);
        let need = shift.max(osr.output_width) as u64;
        let max_starved_fill = step * need.div_ceil(step) - step;
        if r as u64 - max_starved_fill < last_width as u64 {
            v.push(Violation::new(
                format!("osr.available_shifts[{i}]"),
                format!("a {r}-bit register would starve shifting by {shift}"),
            ));
        }
    }
}

/// Per-run pattern settings, one entry per level where the port is per level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeInputs {
    pub start_address: u64,
    pub cycle_length: Vec<u64>,
    pub inter_cycle_shift: Vec<u64>,
    pub skip_shift: Vec<u64>,
    #[serde(default)]
    pub disable_output: bool,
    /// Index into the OSR's available shifts, counted from one; zero disables
    /// OSR output.
    #[serde(default)]
    pub shift_select: u32,
}

impl RuntimeInputs {
    /// Same pattern on every level.
    pub fn uniform(levels: usize, cycle_length: u64, shift: u64, skip_shift: u64) -> Self {
        Self {
            start_address: 0,
            cycle_length: vec![cycle_length; levels],
            inter_cycle_shift: vec![shift; levels],
            skip_shift: vec![skip_shift; levels],
            disable_output: false,
            shift_select: 0,
        }
    }

    pub fn with_shift_select(mut self, shift_select: u32) -> Self {
        self.shift_select = shift_select;
        self
    }

    pub fn with_start(mut self, start_address: u64) -> Self {
        self.start_address = start_address;
        self
    }

    pub fn validate(&self, config: &HierarchyConfig) -> Result<()> {
        let n = config.levels.len();
        for (name, arr) in [
            ("cycle_length", &self.cycle_length),
            ("inter_cycle_shift", &self.inter_cycle_shift),
            ("skip_shift", &self.skip_shift),
        ] {
            if arr.len() != n {
                return Err(Error::validation(
                    name,
                    format!("needs one entry per level ({n}), got {}", arr.len()),
                ));
            }
        }
        for l in 0..n {
            if self.cycle_length[l] == 0 {
                return Err(Error::validation(
                    format!("cycle_length[{l}]"),
                    "must be at least one word",
                ));
            }
            if self.inter_cycle_shift[l] > self.cycle_length[l] {
                return Err(Error::validation(
                    format!("inter_cycle_shift[{l}]"),
                    "must not exceed the cycle length",
                ));
            }
        }
        let shifts = config.osr.as_ref().map_or(0, |o| o.available_shifts.len());
        if self.shift_select as usize > shifts {
            return Err(Error::validation(
                "shift_select",
                format!("must lie in 0..={shifts}"),
            ));
        }
        if config.offchip_address_width < 64 && self.start_address >> config.offchip_address_width != 0 {
            return Err(Error::validation(
                "start_address",
                "outside the off-chip address space",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_level() -> HierarchyConfig {
        HierarchyConfig::new(32, vec![LevelConfig::new(32, 64, Ports::Dual)])
    }

    fn fields(cfg: &HierarchyConfig) -> Vec<String> {
        validate_config(cfg).into_iter().map(|v| v.field).collect()
    }

    #[test]
    fn minimal_config_is_valid() {
        assert!(validate_config(&one_level()).is_empty());
    }

    #[test]
    fn six_levels_rejected() {
        let mut cfg = one_level();
        cfg.levels = vec![LevelConfig::new(32, 8, Ports::Dual); 6];
        let v = validate_config(&cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "levels");
        assert!(v[0].rule.contains("range from one to five"));
    }

    #[test]
    fn three_banks_rejected() {
        let mut cfg = one_level();
        cfg.levels[0].banks = 3;
        assert_eq!(fields(&cfg), vec!["levels[0].banks"]);
    }

    #[test]
    fn last_level_must_be_dual_ported() {
        let mut cfg = one_level();
        cfg.levels[0].ports = Ports::Single;
        assert_eq!(fields(&cfg), vec!["levels[0].ports"]);
    }

    #[test]
    fn width_rules() {
        let mut cfg = HierarchyConfig::new(
            32,
            vec![
                LevelConfig::new(96, 8, Ports::Single),
                LevelConfig::new(64, 8, Ports::Dual),
            ],
        );
        assert_eq!(fields(&cfg), vec!["levels[1].word_width"]);
        cfg.levels[0].word_width = 16;
        cfg.levels[1].word_width = 16;
        assert_eq!(fields(&cfg), vec!["offchip_word_width"]);
    }

    #[test]
    fn osr_rules() {
        let base = one_level();
        let ok = base.clone().with_osr(OsrConfig {
            register_width: 128,
            output_width: 32,
            available_shifts: vec![32],
        });
        assert!(validate_config(&ok).is_empty());

        let narrow = base.clone().with_osr(OsrConfig {
            register_width: 16,
            output_width: 8,
            available_shifts: vec![8],
        });
        assert!(fields(&narrow).contains(&"osr.register_width".to_string()));

        let no_shifts = base.clone().with_osr(OsrConfig {
            register_width: 64,
            output_width: 8,
            available_shifts: vec![],
        });
        assert_eq!(fields(&no_shifts), vec!["osr.available_shifts"]);

        let starving = base.with_osr(OsrConfig {
            register_width: 40,
            output_width: 32,
            available_shifts: vec![40],
        });
        assert_eq!(fields(&starving), vec!["osr.available_shifts[0]"]);
    }

    #[test]
    fn runtime_rules() {
        let cfg = one_level();
        assert!(RuntimeInputs::uniform(1, 8, 2, 0).validate(&cfg).is_ok());
        assert!(RuntimeInputs::uniform(2, 8, 2, 0).validate(&cfg).is_err());
        assert!(RuntimeInputs::uniform(1, 4, 5, 0).validate(&cfg).is_err());
        assert!(RuntimeInputs::uniform(1, 0, 0, 0).validate(&cfg).is_err());
        assert!(RuntimeInputs::uniform(1, 4, 0, 0)
            .with_shift_select(1)
            .validate(&cfg)
            .is_err());
    }

    #[test]
    fn clock_periods() {
        assert_eq!(ClockRatio::default().periods(), (4, 1));
        assert_eq!(ClockRatio { external: 6, internal: 4 }.periods(), (3, 2));
    }
}
