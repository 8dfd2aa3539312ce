//! Access-pattern specifications, trace generation, trace statistics and
//! recovery of pattern parameters from raw address traces.
//!
//! Six pattern classes are modeled:
//!
//! ```text
//! sequential      b, b+1, b+2, ...
//! cyclic          b .. b+l-1, b .. b+l-1, ...
//! shifted cyclic  every (skip+1) completed cycles the base moves by s
//! strided         b, b+d, b+2d, ...
//! pseudo-random   seeded hash of the step index
//! parallel        several (shifted) cyclic children, one cycle each in turn
//! ```

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Sequential,
    Cyclic,
    ShiftedCyclic,
    Strided,
    PseudoRandom,
    ParallelShiftedCyclic,
}

fn one() -> u64 {
    1
}

fn default_address_space() -> u64 {
    1 << 16
}

/// Parameterized description of a memory access pattern.
///
/// Addresses are word addresses in the off-chip address space. Lengths and
/// shifts are counted in data words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub kind: PatternKind,
    #[serde(default)]
    pub base_address: u64,
    #[serde(default = "one")]
    pub cycle_length: u64,
    #[serde(default)]
    pub inter_cycle_shift: u64,
    #[serde(default)]
    pub skip_shift: u64,
    #[serde(default = "one")]
    pub stride: u64,
    #[serde(default)]
    pub seed: u64,
    /// Size of the address range a pseudo-random pattern draws from.
    #[serde(default = "default_address_space")]
    pub address_space: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<PatternSpec>,
}

impl PatternSpec {
    fn bare(kind: PatternKind, base_address: u64) -> Self {
        Self {
            kind,
            base_address,
            cycle_length: 1,
            inter_cycle_shift: 0,
            skip_shift: 0,
            stride: 1,
            seed: 0,
            address_space: default_address_space(),
            children: Vec::new(),
        }
    }

    pub fn sequential(base_address: u64) -> Self {
        Self {
            inter_cycle_shift: 1,
            ..Self::bare(PatternKind::Sequential, base_address)
        }
    }

    pub fn cyclic(base_address: u64, cycle_length: u64) -> Self {
        Self {
            cycle_length,
            ..Self::bare(PatternKind::Cyclic, base_address)
        }
    }

    pub fn shifted_cyclic(base_address: u64, cycle_length: u64, shift: u64, skip_shift: u64) -> Self {
        Self {
            cycle_length,
            inter_cycle_shift: shift,
            skip_shift,
            ..Self::bare(PatternKind::ShiftedCyclic, base_address)
        }
    }

    pub fn strided(base_address: u64, stride: u64) -> Self {
        Self {
            stride,
            ..Self::bare(PatternKind::Strided, base_address)
        }
    }

    pub fn pseudo_random(base_address: u64, address_space: u64, seed: u64) -> Self {
        Self {
            seed,
            address_space,
            ..Self::bare(PatternKind::PseudoRandom, base_address)
        }
    }

    pub fn parallel(children: Vec<PatternSpec>) -> Self {
        Self {
            children,
            ..Self::bare(PatternKind::ParallelShiftedCyclic, 0)
        }
    }

    /// Checks the type invariants, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        self.validate_at("pattern")
    }

    fn validate_at(&self, path: &str) -> Result<()> {
        let field = |name: &str| format!("{path}.{name}");
        if self.cycle_length == 0 {
            return Err(Error::validation(field("cycle_length"), "must be positive"));
        }
        if self.stride == 0 {
            return Err(Error::validation(field("stride"), "must be positive"));
        }
        if self.kind != PatternKind::Strided && self.stride != 1 {
            return Err(Error::validation(
                field("stride"),
                "only strided patterns take a non-unit stride",
            ));
        }
        match self.kind {
            PatternKind::Sequential => {
                if self.inter_cycle_shift != self.cycle_length || self.skip_shift != 0 {
                    return Err(Error::validation(
                        field("inter_cycle_shift"),
                        "a sequential pattern shifts by its full cycle length after every cycle",
                    ));
                }
            }
            PatternKind::Cyclic => {
                if self.inter_cycle_shift != 0 {
                    return Err(Error::validation(
                        field("inter_cycle_shift"),
                        "a cyclic pattern has no inter-cycle shift",
                    ));
                }
                if self.skip_shift != 0 {
                    return Err(Error::validation(
                        field("skip_shift"),
                        "a cyclic pattern has no shift to skip",
                    ));
                }
            }
            PatternKind::ShiftedCyclic => {
                if self.inter_cycle_shift == 0 || self.inter_cycle_shift > self.cycle_length {
                    return Err(Error::validation(
                        field("inter_cycle_shift"),
                        "must lie in 1..=cycle_length",
                    ));
                }
            }
            PatternKind::Strided => {}
            PatternKind::PseudoRandom => {
                if self.address_space == 0 {
                    return Err(Error::validation(field("address_space"), "must be positive"));
                }
            }
            PatternKind::ParallelShiftedCyclic => {
                if self.children.is_empty() {
                    return Err(Error::validation(
                        field("children"),
                        "a parallel pattern needs at least one child",
                    ));
                }
                for (i, child) in self.children.iter().enumerate() {
                    let child_path = format!("{path}.children[{i}]");
                    if !matches!(
                        child.kind,
                        PatternKind::Sequential | PatternKind::Cyclic | PatternKind::ShiftedCyclic
                    ) {
                        return Err(Error::validation(
                            format!("{child_path}.kind"),
                            "children must be sequential, cyclic or shifted cyclic",
                        ));
                    }
                    child.validate_at(&child_path)?;
                }
                return Ok(());
            }
        }
        if !self.children.is_empty() {
            return Err(Error::validation(
                field("children"),
                "only parallel patterns have children",
            ));
        }
        Ok(())
    }

    /// Rewrites degenerate shifted-cyclic forms into their canonical kind.
    pub fn canonical(&self) -> PatternSpec {
        match self.kind {
            PatternKind::ShiftedCyclic if self.inter_cycle_shift == 0 => {
                PatternSpec::cyclic(self.base_address, self.cycle_length)
            }
            PatternKind::ShiftedCyclic
                if self.inter_cycle_shift == self.cycle_length && self.skip_shift == 0 =>
            {
                PatternSpec::sequential(self.base_address)
            }
            PatternKind::Sequential => PatternSpec::sequential(self.base_address),
            PatternKind::Strided if self.stride == 1 => PatternSpec::sequential(self.base_address),
            PatternKind::Strided => PatternSpec::strided(self.base_address, self.stride),
            _ => self.clone(),
        }
    }

    /// Address of the `i`-th access. Caller guarantees the spec is valid.
    fn address_at(&self, i: u64) -> u64 {
        match self.kind {
            PatternKind::Sequential | PatternKind::Cyclic | PatternKind::ShiftedCyclic => {
                window_address(
                    self.base_address,
                    self.cycle_length,
                    self.inter_cycle_shift,
                    self.skip_shift,
                    i,
                )
            }
            PatternKind::Strided => self.base_address + i * self.stride,
            PatternKind::PseudoRandom => {
                self.base_address + mix64(self.seed.wrapping_add(i.wrapping_mul(GOLDEN))) % self.address_space
            }
            PatternKind::ParallelShiftedCyclic => {
                let round_len: u64 = self.children.iter().map(|c| c.cycle_length).sum();
                let round = i / round_len;
                let mut rem = i % round_len;
                for child in &self.children {
                    if rem < child.cycle_length {
                        let shifts = round / (child.skip_shift + 1);
                        return child.base_address + shifts * child.inter_cycle_shift + rem;
                    }
                    rem -= child.cycle_length;
                }
                unreachable!("remainder always falls inside one child")
            }
        }
    }
}

/// `i`-th address of a (shifted) cyclic window walk.
fn window_address(base: u64, l: u64, s: u64, skip: u64, i: u64) -> u64 {
    let cycle = i / l;
    base + (cycle / (skip + 1)) * s + i % l
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Ordered word addresses, optionally grouped into parallel steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressTrace {
    addresses: Vec<u64>,
    words_per_step: usize,
}

impl AddressTrace {
    pub fn scalar(addresses: Vec<u64>) -> Self {
        Self {
            addresses,
            words_per_step: 1,
        }
    }

    pub fn grouped(addresses: Vec<u64>, words_per_step: usize) -> Result<Self> {
        if words_per_step == 0 {
            return Err(Error::validation("words_per_step", "must be positive"));
        }
        if addresses.len() % words_per_step != 0 {
            return Err(Error::validation(
                "addresses",
                format!(
                    "length {} is not a multiple of {words_per_step} words per step",
                    addresses.len()
                ),
            ));
        }
        Ok(Self {
            addresses,
            words_per_step,
        })
    }

    pub fn addresses(&self) -> &[u64] {
        &self.addresses
    }

    pub fn words_per_step(&self) -> usize {
        self.words_per_step
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = &[u64]> {
        self.addresses.chunks(self.words_per_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub total_accesses: usize,
    pub unique_addresses: usize,
    pub reuse_rate: f64,
    /// Largest number of addresses live at once, an address being live from
    /// its first to its last use.
    pub max_working_set: usize,
}

pub fn gen_trace(spec: &PatternSpec, n_accesses: usize) -> Result<AddressTrace> {
    spec.validate()?;
    let addresses = (0..n_accesses as u64).map(|i| spec.address_at(i)).collect();
    Ok(AddressTrace::scalar(addresses))
}

pub fn trace_stats(trace: &AddressTrace) -> TraceStats {
    let addrs = trace.addresses();
    let mut first_last: HashMap<u64, (usize, usize)> = HashMap::new();
    for (t, &a) in addrs.iter().enumerate() {
        first_last.entry(a).and_modify(|e| e.1 = t).or_insert((t, t));
    }
    let total = addrs.len();
    let unique = first_last.len();
    let reuse_rate = if total == 0 {
        0.0
    } else {
        1.0 - unique as f64 / total as f64
    };

    // +1 at first use, -1 just after last use
    let mut delta = vec![0i64; total + 1];
    for &(first, last) in first_last.values() {
        delta[first] += 1;
        delta[last + 1] -= 1;
    }
    let mut live = 0i64;
    let mut max_working_set = 0i64;
    for d in &delta[..total] {
        live += d;
        max_working_set = max_working_set.max(live);
    }

    TraceStats {
        total_accesses: total,
        unique_addresses: unique,
        reuse_rate,
        max_working_set: max_working_set as usize,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Pattern(PatternSpec),
    Unclassified,
}

impl Classification {
    pub fn pattern(&self) -> Option<&PatternSpec> {
        match self {
            Classification::Pattern(p) => Some(p),
            Classification::Unclassified => None,
        }
    }
}

/// Recovers the canonical sequential/cyclic/shifted-cyclic/strided spec that
/// reproduces `trace` exactly, preferring the smallest cycle length.
pub fn classify_trace(trace: &AddressTrace) -> Result<Classification> {
    if trace.words_per_step() != 1 {
        return Err(Error::validation(
            "trace.words_per_step",
            "classification needs a scalar trace",
        ));
    }
    let a = trace.addresses();
    if a.len() < 2 {
        return Err(Error::validation(
            "trace.addresses",
            "at least two addresses are needed to classify",
        ));
    }
    let base = a[0];

    // constant non-unit positive difference
    if a[1] > a[0] + 1 {
        let stride = a[1] - a[0];
        if a.windows(2).all(|w| w[1] == w[0] + stride) {
            return Ok(Classification::Pattern(PatternSpec::strided(base, stride)));
        }
    }

    for l in 1..=(a.len() / 2) {
        if let Some(spec) = window_candidate(a, l as u64) {
            let candidate = spec.canonical();
            if a.iter()
                .enumerate()
                .all(|(i, &x)| candidate.address_at(i as u64) == x)
            {
                return Ok(Classification::Pattern(candidate));
            }
        }
    }
    Ok(Classification::Unclassified)
}

/// Reads off shift and skip count for cycle length `l` from the cycle
/// starting addresses, or `None` if the trace cannot be a window walk.
fn window_candidate(a: &[u64], l: u64) -> Option<PatternSpec> {
    let base = a[0];
    let l_us = l as usize;
    if (1..l_us).any(|p| a[p] != base + p as u64) {
        return None;
    }
    let starts: Vec<u64> = a.iter().step_by(l_us).copied().collect();
    let (shift, skip) = match starts.iter().position(|&s| s != base) {
        None => (0, 0),
        Some(c) => {
            let s = starts[c].checked_sub(base)?;
            (s, c as u64 - 1)
        }
    };
    if shift > l {
        return None;
    }
    if shift == 0 {
        return Some(PatternSpec::cyclic(base, l));
    }
    Some(PatternSpec::shifted_cyclic(base, l, shift, skip))
}

/// Distinct addresses, used by analyses that only care about the address set.
pub fn address_set(trace: &AddressTrace) -> HashSet<u64> {
    trace.addresses().iter().copied().collect()
}
