//! Timing-free reference model of the hierarchy's output data.
//!
//! Every level is described by the index map of its pattern over its own
//! input stream. Composing those maps from the last level down to level 0
//! yields, for every output word, the off-chip words it was built from.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::{HierarchyConfig, RuntimeInputs};
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedStream {
    pub outputs: Vec<Word>,
    /// Off-chip address -> number of times it must be fetched.
    pub minimal_fetches: BTreeMap<u64, u64>,
}

#[derive(Debug, Clone, Copy)]
struct LevelMap {
    l: u64,
    s: u64,
    skip: u64,
    fits: bool,
}

impl LevelMap {
    /// Input-stream index read by the `j`-th access of this level's pattern.
    fn at(&self, j: u64) -> u64 {
        (j / self.l) / (self.skip + 1) * self.s + j % self.l
    }
}

fn level_maps(config: &HierarchyConfig, runtime: &RuntimeInputs) -> Vec<LevelMap> {
    config
        .levels
        .iter()
        .enumerate()
        .map(|(k, lv)| LevelMap {
            l: runtime.cycle_length[k],
            s: runtime.inter_cycle_shift[k],
            skip: runtime.skip_shift[k],
            fits: runtime.cycle_length[k] <= lv.banks as u64 * lv.ram_depth,
        })
        .collect()
}

/// Level-0 access index behind the `j`-th word leaving the last level.
fn level0_access(maps: &[LevelMap], j: u64) -> u64 {
    let mut idx = j;
    for m in maps.iter().skip(1).rev() {
        if m.fits {
            idx = m.at(idx);
        }
    }
    idx
}

/// Expected first `n` output words for `runtime` on `config`, under the
/// identity payload (an off-chip word holds its own address).
pub fn expected_outputs(
    config: &HierarchyConfig,
    runtime: &RuntimeInputs,
    n: usize,
) -> Result<ExpectedStream> {
    let violations = crate::sim::validate_config(config);
    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    runtime.validate(config)?;
    let w = config.levels[0].word_width;
    if config.levels.iter().any(|lv| lv.word_width != w) {
        return Err(Error::validation(
            "levels.word_width",
            "the reference model needs equal widths on all levels",
        ));
    }
    let off_w = config.offchip_word_width;
    let per_word = (w / off_w) as u64;
    let maps = level_maps(config, runtime);

    let (words_needed, osr) = match &config.osr {
        None => (n as u64, None),
        Some(o) => {
            let sel = runtime.shift_select as usize;
            if sel == 0 {
                return Err(Error::validation(
                    "runtime.shift_select",
                    "shift_select 0 disables every output",
                ));
            }
            let shift = o.available_shifts[sel - 1] as u64;
            let bits = if n == 0 {
                0
            } else {
                (n as u64 - 1) * shift + o.output_width as u64
            };
            (bits.div_ceil(w as u64), Some((shift, o.output_width)))
        }
    };

    let mask = if off_w >= 64 { u64::MAX } else { (1u64 << off_w) - 1 };
    let mut last_words: Vec<Vec<u64>> = Vec::with_capacity(words_needed as usize);
    let mut max_access = None;
    for j in 0..words_needed {
        let a = level0_access(&maps, j);
        max_access = max_access.max(Some(a));
        let entry = maps[0].at(a);
        last_words.push(
            (0..per_word)
                .map(|i| runtime.start_address + entry * per_word + i)
                .collect(),
        );
    }

    let outputs = match osr {
        None => last_words
            .iter()
            .map(|parts| word_from_parts(parts, off_w, mask))
            .collect(),
        Some((shift, out_w)) => {
            let bits: Vec<bool> = last_words
                .iter()
                .flat_map(|parts| parts.iter().flat_map(move |&a| msb_bits(a & mask, off_w)))
                .collect();
            (0..n as u64)
                .map(|i| {
                    let from = (i * shift) as usize;
                    Word::from_msb_bits(bits[from..from + out_w as usize].iter().copied(), out_w)
                })
                .collect()
        }
    };

    let mut minimal_fetches = BTreeMap::new();
    if let Some(last) = max_access {
        let entries: Vec<u64> = if maps[0].fits {
            let top = (0..=last).map(|a| maps[0].at(a)).max().unwrap_or(0);
            (0..=top).collect()
        } else {
            (0..=last).map(|a| maps[0].at(a)).collect()
        };
        for e in entries {
            for i in 0..per_word {
                *minimal_fetches
                    .entry(runtime.start_address + e * per_word + i)
                    .or_insert(0) += 1;
            }
        }
    }

    Ok(ExpectedStream {
        outputs,
        minimal_fetches,
    })
}

fn msb_bits(value: u64, width: u32) -> impl Iterator<Item = bool> {
    (0..width)
        .rev()
        .map(move |p| p < 64 && value >> p & 1 == 1)
}

fn word_from_parts(parts: &[u64], off_w: u32, mask: u64) -> Word {
    let width = off_w * parts.len() as u32;
    Word::from_msb_bits(
        parts.iter().flat_map(|&a| msb_bits(a & mask, off_w)),
        width,
    )
}
